"""Merge raw candidates from all augmented views into canonical-space candidates."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Sequence

from .augment import Augmentation, invert
from .errors import ParseError
from .grid import Grid, grids_equal
from .search import RawCandidate
from .tokenizer import decode_grid


@dataclass
class Candidate:
    grid: Grid
    gen_records: list[tuple[int, float]] = field(default_factory=list)

    @property
    def best_gen_logprob(self) -> float:
        return max(lp for _, lp in self.gen_records)

    @property
    def sources(self) -> list[int]:
        return sorted({j for j, _ in self.gen_records})


def candidate_order(c: Candidate):
    return (-c.best_gen_logprob, c.grid.sort_key())


@dataclass
class Pool:
    """Canonical candidates, sorted by best generation log-prob then grid order."""

    candidates: list[Candidate]
    parse_failures: int = 0
    failure_kinds: Counter = field(default_factory=Counter)
    test_index: int = 0

    def __len__(self):
        return len(self.candidates)

    def __iter__(self):
        return iter(self.candidates)

    def __getitem__(self, i):
        return self.candidates[i]

    def grids(self) -> list[Grid]:
        return [c.grid for c in self.candidates]

    def find(self, grid: Grid) -> Candidate | None:
        for c in self.candidates:
            if grids_equal(c.grid, grid):
                return c
        return None


def build_pool(raw: Sequence[RawCandidate], augs: Sequence[Augmentation], test_index: int = 0) -> Pool:
    inverses = {}
    merged: dict[Grid, Candidate] = {}
    failures = Counter()
    for rc in raw:
        if rc.truncated:
            failures["unterminated"] += 1
            continue
        try:
            g = decode_grid(rc.tokens)
        except ParseError as e:
            failures[e.kind] += 1
            continue
        j = rc.source_aug
        if j not in inverses:
            inverses[j] = invert(augs[j])
        g = inverses[j].apply_grid(g)
        merged.setdefault(g, Candidate(g)).gen_records.append((j, rc.gen_logprob))
    cands = sorted(merged.values(), key=candidate_order)
    for c in cands:
        c.gen_records.sort()
    return Pool(cands, sum(failures.values()), failures, test_index)


@dataclass(frozen=True)
class PoolStats:
    n_candidates: int
    contains_correct: bool


def pool_stats(pool: Pool, truth: Grid | None = None) -> PoolStats:
    found = truth is not None and pool.find(truth) is not None
    return PoolStats(len(pool), found)
