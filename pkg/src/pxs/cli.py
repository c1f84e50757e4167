"""Command-line driver: solve, enumerate, score, verify-theorem, bench, export-vocab.

Exit status is 0 on success, 1 when a task errors or a check fails, and 2 on
usage errors (bad flags, missing or malformed inputs).  Diagnostics go to
stderr; tables and reports go to stdout or to the requested files.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
import time
from pathlib import Path

from .augment import AugmentationSetSpec, make_augmentation_set
from .errors import ContractError, FormatError, ProtocolError, PxsError, TransportError, ValidationError
from .grid import Grid, grids_equal, load_tasks, write_submission
from .model import make_backend
from .pipeline import (
    METHODS,
    PipelineConfig,
    TraceWriter,
    derive_seed,
    generate,
    run_batch,
    submission_map,
    write_metrics,
)
from .pool import Candidate
from .scorer import AGGREGATIONS, aggregate, ranking, score_candidates, select_top2
from .search import SearchBudget
from .synthetic import synthetic_suite
from .theory import run_trials, write_trials
from .tokenizer import export_vocab, vocab_text

log = logging.getLogger("pxs")

AUG_COUNTS = (1, 2, 4, 8, 16)
DEFAULT_MODEL = "rule:auto,eps=0.05,slip=0.05"


class UsageError(Exception):
    pass


def _probability(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not 0.0 < v <= 1.0:
        raise argparse.ArgumentTypeError(f"{v} is not in (0, 1]")
    return v


def _positive(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"{v} must be >= 1")
    return v


def _csv(cast):
    def parse(text: str):
        items = [s for s in text.split(",") if s.strip()]
        try:
            return [cast(s.strip()) for s in items]
        except (ValueError, argparse.ArgumentTypeError) as e:
            raise argparse.ArgumentTypeError(str(e)) from None
    return parse


def _search_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--model", default=DEFAULT_MODEL, help="table:seed=N | rule:FAMILY,eps=X[,slip=Y] | remote:URL")
    p.add_argument("--method", choices=METHODS, default="dfs")
    p.add_argument("--threshold", type=_probability, default=0.09, help="DFS probability floor in (0, 1]")
    p.add_argument("--samples", type=_positive, default=1, help="rollouts per augmentation (stochastic)")
    p.add_argument("--beam-width", type=_positive, default=1)
    p.add_argument("--gen-augs", type=int, choices=AUG_COUNTS, default=16)
    p.add_argument("--score-augs", type=int, choices=AUG_COUNTS, default=16)
    p.add_argument("--agg", choices=AGGREGATIONS, default="product")
    p.add_argument("--seed", type=int, default=0)


def _task_flags(p: argparse.ArgumentParser, required: bool = True) -> None:
    p.add_argument("--tasks", required=required, type=Path, help="ARC task JSON file")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="pxs", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true", help="debug logging on stderr")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="run the pipeline over a task file")
    _task_flags(p)
    _search_flags(p)
    p.add_argument("--workers", type=_positive, default=1)
    p.add_argument("--out", type=Path, help="submission JSON")
    p.add_argument("--metrics", type=Path, help="per-task metrics CSV")
    p.add_argument("--trace", type=Path, help="JSONL search trace")
    p.add_argument("--no-timing", action="store_true", help="leave timing columns empty in the metrics file")

    p = sub.add_parser("enumerate", help="list the pooled candidates of one task")
    _task_flags(p)
    _search_flags(p)
    p.add_argument("--task-id")
    p.add_argument("--test-index", type=int, default=0)
    p.add_argument("--trace", type=Path)

    p = sub.add_parser("score", help="rescore candidates of one task under fresh augmentations")
    _task_flags(p)
    _search_flags(p)
    p.add_argument("--task-id")
    p.add_argument("--test-index", type=int, default=0)
    p.add_argument("--candidates", type=Path, help="JSON list of grids; default: the generated pool")
    p.add_argument("--out", type=Path, help="score matrix CSV")

    p = sub.add_parser("verify-theorem", help="Monte-Carlo check of the log-pooling KL decomposition")
    p.add_argument("--trials", type=_positive, default=10_000)
    p.add_argument("--experts", type=_csv(_positive), default=[2, 4, 8, 16], help="comma list of expert counts")
    p.add_argument("--support", type=_positive, help="fixed support size (default: random 2..64)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=Path, help="per-trial CSV")

    p = sub.add_parser("bench", help="plot-ready sweep over methods and budgets")
    _task_flags(p, required=False)
    _search_flags(p)
    p.add_argument("--suite", type=_positive, default=50, help="synthetic task count when --tasks is absent")
    p.add_argument("--methods", type=_csv(str), default=["greedy", "dfs"])
    p.add_argument("--thresholds", type=_csv(_probability), default=[0.5, 0.2, 0.09, 0.005])
    p.add_argument("--beam-widths", type=_csv(_positive), default=[1, 2, 4])
    p.add_argument("--workers", type=_positive, default=1)
    p.add_argument("--out", type=Path, help="CSV file (default: stdout)")
    p.add_argument("--no-timing", action="store_true")

    p = sub.add_parser("export-vocab", help="write the 64-token vocabulary")
    p.add_argument("--out", type=Path, help="TSV file (default: stdout)")
    return ap


def _config(args, method=None, threshold=None, beam_width=None, workers=1) -> PipelineConfig:
    method = method or args.method
    budget = SearchBudget(
        threshold=threshold if threshold is not None else (args.threshold if method == "dfs" else None),
        samples_per_aug=args.samples,
        beam_width=beam_width or args.beam_width,
    )
    return PipelineConfig(args.gen_augs, args.score_augs, method, budget, args.agg, args.seed, workers)


def _load(path: Path):
    if not path.is_file():
        raise UsageError(f"tasks file not found: {path}")
    try:
        return load_tasks(path)
    except (FormatError, ValidationError) as e:
        raise UsageError(f"cannot read {path}: {e}") from None


def _pick(tasks, task_id):
    if task_id is None:
        if len(tasks) != 1:
            raise UsageError(f"--task-id is required; the file holds {len(tasks)} tasks")
        return tasks[0]
    for t in tasks:
        if t.id == task_id:
            return t
    raise UsageError(f"unknown task id {task_id!r}")


def _backend(spec: str):
    try:
        return make_backend(spec)
    except ContractError as e:
        raise UsageError(str(e)) from None


def _grid_json(g: Grid) -> str:
    return json.dumps(g.to_list(), separators=(",", ":"))


def cmd_solve(args) -> int:
    tasks = _load(args.tasks)
    cfg = _config(args, workers=args.workers)
    model = _backend(args.model)
    trace = TraceWriter(args.trace) if args.trace else None
    try:
        results, m = run_batch(model, tasks, cfg, trace)
    finally:
        if trace:
            trace.close()
    if args.out:
        write_submission(submission_map(results, tasks), args.out)
    if args.metrics:
        write_metrics(results, m, args.metrics, timing=not args.no_timing)
    for r in results:
        if r.error:
            print(f"task {r.task_id}: {r.error}", file=sys.stderr)
    if m.with_truth:
        print(f"accuracy {m.accuracy:.4f} ({m.correct_top2}/{m.with_truth}) "
              f"solutions_found {m.found_rate:.4f} mean_candidates {m.mean_candidates:.2f}")
    else:
        print(f"solved {m.tasks - m.errored}/{m.tasks} tasks (no reference outputs)")
    return 1 if m.errored else 0


def _pool_for(args, model, task):
    if not 0 <= args.test_index < len(task.test_inputs):
        raise UsageError(f"task {task.id!r} has no test input {args.test_index}")
    cfg = _config(args)
    trace = TraceWriter(args.trace) if getattr(args, "trace", None) else None
    try:
        pool, _ = generate(model, task, args.test_index, cfg, derive_seed(cfg.seed, task.id), trace)
    finally:
        if trace:
            trace.close()
    return pool


def cmd_enumerate(args) -> int:
    task = _pick(_load(args.tasks), args.task_id)
    model = _backend(args.model)
    pool = _pool_for(args, model, task)
    for c in pool:
        sources = ",".join(map(str, c.sources))
        print(f"{math.exp(c.best_gen_logprob):.6f}\t{c.best_gen_logprob:.6f}\t{_grid_json(c.grid)}\taugs={sources}")
    if pool.parse_failures:
        print(f"{pool.parse_failures} unparseable candidates dropped: {dict(pool.failure_kinds)}", file=sys.stderr)
    return 0


def _read_candidates(path: Path) -> list[Grid]:
    try:
        data = json.loads(path.read_text())
        if not isinstance(data, list):
            raise ValueError("expected a JSON list of grids")
        return [Grid.from_list(g) for g in data]
    except (OSError, ValueError, ValidationError) as e:
        raise UsageError(f"cannot read candidates from {path}: {e}") from None


def cmd_score(args) -> int:
    task = _pick(_load(args.tasks), args.task_id)
    model = _backend(args.model)
    if args.candidates:
        if not 0 <= args.test_index < len(task.test_inputs):
            raise UsageError(f"task {task.id!r} has no test input {args.test_index}")
        pool = [Candidate(g, [(0, 0.0)]) for g in dict.fromkeys(_read_candidates(args.candidates))]
    else:
        pool = list(_pool_for(args, model, task))
    if not pool:
        print("no candidates to score", file=sys.stderr)
        return 0
    augs = make_augmentation_set(
        AugmentationSetSpec(args.score_augs, derive_seed(derive_seed(args.seed, task.id), "score", args.test_index)), task.k
    )
    L = score_candidates(model, task, args.test_index, pool, augs)
    if args.out:
        L.dump(args.out)
    scores = aggregate(L, args.agg)
    top = select_top2(pool, scores)
    order = ranking(pool, scores)
    truth = task.test_outputs[args.test_index] if task.test_outputs else None
    for rank, i in enumerate(order, 1):
        mark = "" if truth is None else ("\tcorrect" if grids_equal(pool[i].grid, truth) else "")
        print(f"{rank}\t{scores[i]:.6f}\t{_grid_json(pool[i].grid)}{mark}")
    if truth is not None:
        print(f"top-2 {'contains' if any(grids_equal(g, truth) for g in top) else 'misses'} the answer",
              file=sys.stderr)
    return 0


def cmd_verify_theorem(args) -> int:
    rows = [] if args.out else None
    n = args.support
    s = run_trials(args.trials, args.seed, ms=tuple(args.experts),
                   n_max=n or 64, n_min=n or 2, rows=rows)
    if rows is not None:
        write_trials(rows, args.out)
    print(f"trials {s.trials}")
    print(f"max |residual| {s.max_abs_residual:.3e}")
    print(f"max log_Z {s.max_log_Z:.3e}")
    print(f"identical-expert trials {s.identical_trials}, max |log_Z| {s.max_abs_log_Z_identical:.3e}")
    if math.isfinite(s.min_abs_log_Z_distinct):
        print(f"min |log_Z| with distinct experts {s.min_abs_log_Z_distinct:.3e}")
    print(f"bound violations {s.bound_violations}, failed trials {s.failures}")
    return 0 if s.ok else 1


BENCH_COLUMNS = ("method", "param", "solutions_found", "mean_pool", "acc_product", "acc_sum", "acc_min", "acc_max",
                 "runtime_ms")


def _accuracy_by_rule(results, tasks) -> dict[str, float]:
    truth = {t.id: t.test_outputs for t in tasks}
    graded = [r for r in results if truth[r.task_id] is not None]
    acc = {}
    for rule in AGGREGATIONS:
        ok = 0
        for r in graded:
            if r.error or len(r.details) != len(truth[r.task_id]):
                continue
            good = True
            for d, want in zip(r.details, truth[r.task_id]):
                if d.matrix is None:
                    good = False
                    break
                top = select_top2(d.pool, aggregate(d.matrix, rule))
                good &= any(grids_equal(g, want) for g in top)
            ok += good
        acc[rule] = ok / len(graded) if graded else 0.0
    return acc


def cmd_bench(args) -> int:
    if not args.methods:
        raise UsageError("--methods is empty")
    bad = [m for m in args.methods if m not in METHODS]
    if bad:
        raise UsageError(f"unknown methods {bad}; choose from {METHODS}")
    tasks = _load(args.tasks) if args.tasks else synthetic_suite(args.suite, args.seed)
    model = _backend(args.model)
    grid = []
    for method in args.methods:
        if method == "dfs":
            grid += [(method, t, dict(threshold=t)) for t in args.thresholds]
        elif method == "beam":
            grid += [(method, w, dict(beam_width=w)) for w in args.beam_widths]
        elif method == "stochastic":
            grid.append((method, args.samples, {}))
        else:
            grid.append((method, "", {}))
    lines = [",".join(BENCH_COLUMNS)]
    for method, param, kw in grid:
        cfg = _config(args, method=method, workers=args.workers, **kw)
        t0 = time.perf_counter()
        results, m = run_batch(model, tasks, cfg)
        elapsed = (time.perf_counter() - t0) * 1000
        acc = _accuracy_by_rule(results, tasks)
        row = [method, param, f"{m.found_rate:.4f}", f"{m.mean_candidates:.3f}",
               *(f"{acc[r]:.4f}" for r in AGGREGATIONS), "" if args.no_timing else f"{elapsed:.1f}"]
        lines.append(",".join(map(str, row)))
        log.info("bench %s %s done", method, param)
    text = "\n".join(lines) + "\n"
    if args.out:
        args.out.write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_export_vocab(args) -> int:
    if args.out:
        export_vocab(args.out)
    else:
        sys.stdout.write(vocab_text())
    return 0


COMMANDS = {
    "solve": cmd_solve,
    "enumerate": cmd_enumerate,
    "score": cmd_score,
    "verify-theorem": cmd_verify_theorem,
    "bench": cmd_bench,
    "export-vocab": cmd_export_vocab,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return COMMANDS[args.command](args)
    except UsageError as e:
        print(f"pxs {args.command}: {e}", file=sys.stderr)
        return 2
    except (TransportError, ProtocolError) as e:
        print(f"pxs {args.command}: remote backend failed: {e}", file=sys.stderr)
        return 1
    except PxsError as e:
        print(f"pxs {args.command}: {type(e).__name__}: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
