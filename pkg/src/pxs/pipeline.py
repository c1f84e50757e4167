"""Generate-then-rescore orchestration over tasks."""

from __future__ import annotations

import hashlib
import io
import json
import logging
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

from .augment import AugmentationSetSpec, apply_to_task, invert, make_augmentation_set
from .errors import ContractError, ParseError, PxsError, ScoringError
from .grid import Grid, Task, grids_equal
from .model import Model
from .pool import Pool, build_pool
from .scorer import AGGREGATIONS, ScoreMatrix, aggregate, rank_of, score_candidates, select_top2
from .search import RawCandidate, SearchBudget, beam_sample, dfs_sample, greedy_sample, stochastic_sample
from .tokenizer import decode_grid, encode_prompt, encode_solution

log = logging.getLogger(__name__)

METHODS = ("dfs", "greedy", "stochastic", "beam")
METRIC_COLUMNS = ("task_id", "n_candidates", "solution_found", "selected_rank", "correct_top2", "gen_ms", "score_ms")


def no_test_time_training(model: Model, task: Task) -> Model:
    """Placeholder for per-task fine-tuning; the model is used as given."""
    return model


@dataclass(frozen=True)
class PipelineConfig:
    gen_augs: int = 16
    score_augs: int = 16
    method: str = "dfs"
    budget: SearchBudget = SearchBudget(threshold=0.09)
    aggregation: str = "product"
    seed: int = 0
    parallel_tasks: int = 1
    ttt_hook: Callable[[Model, Task], Model] = no_test_time_training

    def __post_init__(self):
        if self.method not in METHODS:
            raise ContractError(f"unknown method {self.method!r}; choose from {METHODS}")
        if self.aggregation not in AGGREGATIONS:
            raise ContractError(f"unknown aggregation {self.aggregation!r}")
        if self.method == "dfs" and self.budget.threshold is None:
            raise ContractError("dfs needs a threshold")
        if self.parallel_tasks < 1:
            raise ContractError("parallel_tasks must be >= 1")
        AugmentationSetSpec(self.gen_augs)
        AugmentationSetSpec(self.score_augs)


def derive_seed(*parts) -> int:
    """Stable 63-bit seed from any sequence of printable parts."""
    h = hashlib.sha256(":".join(map(str, parts)).encode()).digest()
    return int.from_bytes(h[:8], "little") >> 1


@dataclass
class InputResult:
    attempts: tuple[Grid, Grid]
    pool: Pool
    scores: list[float]
    matrix: ScoreMatrix | None = None
    solution_found: bool | None = None
    selected_rank: int | None = None
    correct_top2: bool | None = None


@dataclass
class TaskResult:
    task_id: str
    attempts: list[tuple[Grid, Grid]] = field(default_factory=list)
    pool_size: int = 0
    solution_found: bool | None = None
    selected_rank: int | None = None
    correct_top2: bool | None = None
    gen_ms: float = 0.0
    score_ms: float = 0.0
    error: str | None = None
    has_truth: bool = False
    details: list[InputResult] = field(default_factory=list)

    def outcome(self) -> tuple:
        """Everything except timings, for determinism comparisons."""
        return (self.task_id, [tuple(g.cells for g in a) for a in self.attempts], self.pool_size,
                self.solution_found, self.selected_rank, self.correct_top2, self.error)


def generate(model: Model, task: Task, test_index: int, cfg: PipelineConfig, seed: int,
             trace=None) -> tuple[Pool, list]:
    """Run the configured search under every generation augmentation and pool the results."""
    augs = make_augmentation_set(AugmentationSetSpec(cfg.gen_augs, derive_seed(seed, "gen", test_index)), task.k)
    raw: list[RawCandidate] = []
    best: tuple[float, Grid] | None = None
    for j, a in enumerate(augs):
        prompt = encode_prompt(apply_to_task(a, task), test_index)
        sess = model.session()
        tr = None if trace is None else (lambda ev, d, s, j=j: trace(task.id, j, ev, d, s))
        if cfg.method == "dfs":
            guess = None if best is None else encode_solution(a.apply_grid(best[1]))
            found = dfs_sample(sess, prompt, cfg.budget, guess, source_aug=j, trace=tr)
        elif cfg.method == "greedy":
            found = greedy_sample(sess, prompt, cfg.budget, source_aug=j)
        elif cfg.method == "stochastic":
            found = stochastic_sample(sess, prompt, cfg.budget, seed=derive_seed(seed, "sample", test_index, j),
                                      source_aug=j)
        else:
            found = beam_sample(sess, prompt, cfg.budget, source_aug=j)
        raw.extend(found)
        if cfg.method == "dfs":
            inv = invert(a)
            for rc in found:
                if rc.truncated:
                    continue
                try:
                    g = inv.apply_grid(decode_grid(rc.tokens))
                except ParseError:
                    continue
                if best is None or rc.gen_logprob > best[0]:
                    best = (rc.gen_logprob, g)
    return build_pool(raw, augs, test_index), augs


def solve_task(model: Model, task: Task, cfg: PipelineConfig, trace=None) -> TaskResult:
    seed = derive_seed(cfg.seed, task.id)
    truth_known = task.test_outputs is not None
    res = TaskResult(task.id, has_truth=truth_known)
    model = cfg.ttt_hook(model, task)
    for ti in range(len(task.test_inputs)):
        t0 = time.perf_counter()
        pool, _ = generate(model, task, ti, cfg, seed, trace)
        t1 = time.perf_counter()
        res.gen_ms += (t1 - t0) * 1000
        scores: list[float] = []
        L = None
        if len(pool):
            augs2 = make_augmentation_set(AugmentationSetSpec(cfg.score_augs, derive_seed(seed, "score", ti)), task.k)
            try:
                L = score_candidates(model, task, ti, pool, augs2)
            except ScoringError as e:
                res.error = str(e)
                res.score_ms += (time.perf_counter() - t1) * 1000
                return res
            scores = aggregate(L, cfg.aggregation).tolist()
        res.score_ms += (time.perf_counter() - t1) * 1000
        attempts = select_top2(pool, scores)
        detail = InputResult(attempts, pool, scores, L)
        if truth_known:
            truth = task.test_outputs[ti]
            detail.solution_found = pool.find(truth) is not None
            detail.selected_rank = rank_of(truth, pool, scores)
            detail.correct_top2 = any(grids_equal(g, truth) for g in attempts)
        res.details.append(detail)
        res.attempts.append(attempts)
        res.pool_size += len(pool)
    if truth_known:
        res.solution_found = all(d.solution_found for d in res.details)
        res.correct_top2 = all(d.correct_top2 for d in res.details)
        ranks = [d.selected_rank for d in res.details]
        res.selected_rank = None if None in ranks else max(ranks)
    return res


@dataclass
class BatchMetrics:
    tasks: int = 0
    errored: int = 0
    with_truth: int = 0
    correct_top2: int = 0
    solutions_found: int = 0
    mean_candidates: float = 0.0
    gen_ms: float = 0.0
    score_ms: float = 0.0
    wall_ms: float = 0.0

    @property
    def accuracy(self) -> float:
        return self.correct_top2 / self.with_truth if self.with_truth else 0.0

    @property
    def found_rate(self) -> float:
        return self.solutions_found / self.with_truth if self.with_truth else 0.0


def _solve_safe(model, task, cfg, trace):
    try:
        return solve_task(model, task, cfg, trace)
    except PxsError as e:
        log.error("task %s failed: %s", task.id, e)
        return TaskResult(task.id, error=f"{type(e).__name__}: {e}", has_truth=task.test_outputs is not None)


def summarize(results: Sequence[TaskResult], wall_ms: float = 0.0) -> BatchMetrics:
    m = BatchMetrics(tasks=len(results), wall_ms=wall_ms)
    for r in results:
        m.errored += r.error is not None
        m.gen_ms += r.gen_ms
        m.score_ms += r.score_ms
        if r.has_truth:
            m.with_truth += 1
            m.correct_top2 += bool(r.correct_top2)
            m.solutions_found += bool(r.solution_found)
    if results:
        m.mean_candidates = sum(r.pool_size for r in results) / len(results)
    return m


def run_batch(model: Model, tasks: Sequence[Task], cfg: PipelineConfig, trace=None) -> tuple[list[TaskResult], BatchMetrics]:
    """Solve every task; results come back sorted by task id whatever the worker count."""
    t0 = time.perf_counter()
    if cfg.parallel_tasks == 1 or len(tasks) <= 1:
        results = [_solve_safe(model, t, cfg, trace) for t in tasks]
    else:
        with ThreadPoolExecutor(max_workers=cfg.parallel_tasks) as ex:
            results = list(ex.map(lambda t: _solve_safe(model, t, cfg, trace), tasks))
    results.sort(key=lambda r: r.task_id)
    return results, summarize(results, (time.perf_counter() - t0) * 1000)


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return str(int(v))
    return str(v)


def metrics_text(results: Sequence[TaskResult], metrics: BatchMetrics, timing: bool = True) -> str:
    """CSV rows per task plus a commented summary line.

    With ``timing=False`` the millisecond columns stay empty so the file is a
    pure function of the inputs and seed.
    """
    buf = io.StringIO()
    buf.write(",".join(METRIC_COLUMNS) + "\n")
    for r in results:
        row = [r.task_id, r.pool_size, r.solution_found, r.selected_rank, r.correct_top2,
               f"{r.gen_ms:.1f}" if timing else None, f"{r.score_ms:.1f}" if timing else None]
        buf.write(",".join(_fmt(v) for v in row) + "\n")
    summary = (f"# tasks={metrics.tasks} errored={metrics.errored} accuracy={metrics.accuracy:.4f} "
               f"solutions_found={metrics.found_rate:.4f} mean_candidates={metrics.mean_candidates:.3f}")
    if timing:
        summary += f" gen_ms={metrics.gen_ms:.1f} score_ms={metrics.score_ms:.1f} wall_ms={metrics.wall_ms:.1f}"
    buf.write(summary + "\n")
    return buf.getvalue()


def write_metrics(results, metrics, path, timing: bool = True) -> None:
    with open(path, "w", newline="") as f:
        f.write(metrics_text(results, metrics, timing))


def submission_map(results: Sequence[TaskResult], tasks: Sequence[Task]) -> dict:
    """Attempts per task id; errored tasks fall back to zero grids."""
    by_id = {r.task_id: r for r in results}
    out = {}
    for t in tasks:
        r = by_id.get(t.id)
        if r is None or r.error or len(r.attempts) != len(t.test_inputs):
            out[t.id] = [(None, None)] * len(t.test_inputs)
        else:
            out[t.id] = list(r.attempts)
    return out


class TraceWriter:
    """Line-delimited JSON search trace: ``{task, aug, event, depth, cum_logprob}``."""

    def __init__(self, path):
        self.f = open(path, "w")
        self._lock = threading.Lock()

    def __call__(self, task, aug, event, depth, cum_logprob):
        line = json.dumps({"task": task, "aug": aug, "event": event, "depth": depth,
                           "cum_logprob": cum_logprob})
        with self._lock:
            self.f.write(line + "\n")

    def close(self):
        self.f.close()
