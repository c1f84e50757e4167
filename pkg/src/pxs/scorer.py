"""Product-of-experts rescoring of pooled candidates and top-2 selection."""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import logsumexp

from .augment import Augmentation, apply_to_task
from .errors import ContractError, ProtocolError, ScoringError, TransportError
from .grid import ZERO_GRID, Grid, Task, grids_equal
from .model import Model, sequence_logprob
from .pool import Candidate, Pool
from .tokenizer import encode_prompt, encode_solution

log = logging.getLogger(__name__)

AGGREGATIONS = ("product", "sum", "min", "max")


@dataclass
class ScoreMatrix:
    """``values[i, j]`` is log P(aug_j(candidate_i) | aug_j(task))."""

    values: np.ndarray
    augmentations: list[Augmentation]

    @property
    def shape(self):
        return self.values.shape

    def dump(self, path, grids: Sequence[Grid] | None = None) -> None:
        with open(path, "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(["candidate", "augmentation", "logprob"])
            for i, row in enumerate(self.values):
                for j, v in enumerate(row):
                    w.writerow([i, self.augmentations[j].describe(), repr(float(v))])


def score_candidates(
    model: Model,
    p: Task,
    test_index: int,
    pool: Pool | Sequence[Candidate] | Sequence[Grid],
    augs2: Sequence[Augmentation],
    retries: int = 1,
) -> ScoreMatrix:
    grids = [c if isinstance(c, Grid) else c.grid for c in pool]
    if not grids:
        raise ContractError("cannot score an empty pool")
    L = np.empty((len(grids), len(augs2)))
    for j, a in enumerate(augs2):
        prompt = encode_prompt(apply_to_task(a, p), test_index)
        sess = model.session()
        for i, g in enumerate(grids):
            cont = encode_solution(a.apply_grid(g))
            for attempt in range(retries + 1):
                try:
                    L[i, j] = sequence_logprob(sess, prompt, cont)
                    break
                except (TransportError, ProtocolError) as e:
                    if attempt == retries:
                        raise ScoringError(
                            f"task {p.id!r}: candidate {i} under {a.describe()} failed: {e}"
                        ) from e
                    sess = model.session()
    return ScoreMatrix(L, list(augs2))


def aggregate(L: ScoreMatrix | np.ndarray, rule: str = "product") -> np.ndarray:
    """Per-candidate scores in log space.  ``product`` is the sum of logs; the
    1/m exponent of the geometric mean does not change the ranking."""
    v = L.values if isinstance(L, ScoreMatrix) else np.asarray(L, dtype=float)
    if rule == "product":
        with np.errstate(invalid="ignore"):
            return v.sum(axis=1)
    if rule == "sum":
        return logsumexp(v, axis=1)
    if rule == "min":
        return v.min(axis=1)
    if rule == "max":
        return v.max(axis=1)
    raise ContractError(f"unknown aggregation {rule!r}; choose from {AGGREGATIONS}")


def ranking(pool, scores) -> list[int]:
    """Candidate indices, best first: score, then generation log-prob, then grid order."""
    cands = list(pool)
    scores = np.asarray(scores, dtype=float)
    if len(scores) != len(cands):
        raise ContractError(f"{len(scores)} scores for {len(cands)} candidates")
    return sorted(
        range(len(cands)),
        key=lambda i: (-scores[i], -cands[i].best_gen_logprob, cands[i].grid.sort_key()),
    )


def select_top2(pool: Pool | Sequence[Candidate], scores) -> tuple[Grid, Grid]:
    """Best two grids by score, then generation log-prob, then grid order."""
    cands = list(pool)
    if not cands:
        log.warning("empty candidate pool; emitting the 1x1 zero grid twice")
        return ZERO_GRID, ZERO_GRID
    order = ranking(cands, scores)
    first = cands[order[0]].grid
    second = cands[order[1]].grid if len(order) > 1 else first
    return first, second


def rank_of(grid: Grid, pool: Pool | Sequence[Candidate], scores) -> int | None:
    cands = list(pool)
    for r, i in enumerate(ranking(cands, scores), start=1):
        if grids_equal(cands[i].grid, grid):
            return r
    return None
