import json

import pytest

from pxs.errors import ContractError, TransportError
from pxs.grid import Task
from pxs.model import Model, RuleModel, TableModel
from pxs.pipeline import (
    PipelineConfig,
    TraceWriter,
    derive_seed,
    metrics_text,
    run_batch,
    solve_task,
    submission_map,
    summarize,
    write_metrics,
)
from pxs.search import SearchBudget
from pxs.synthetic import synthetic_suite

from conftest import G

SLIPPY = RuleModel("auto", eps=0.05, slip=0.05)


@pytest.fixture(scope="module")
def suite():
    return synthetic_suite(8, seed=2)


def test_deterministic_rule_solves_with_one_candidate(small_task):
    r = solve_task(RuleModel("flip", eps=0.0), small_task, PipelineConfig())
    assert r.pool_size == 1 and r.solution_found and r.correct_top2 and r.selected_rank == 1
    assert r.attempts[0] == (small_task.test_outputs[0],) * 2


def test_greedy_single_view(small_task):
    cfg = PipelineConfig(gen_augs=1, score_augs=1, method="greedy", budget=SearchBudget())
    r = solve_task(RuleModel("flip", eps=0.1), small_task, cfg)
    assert r.pool_size == 1 and r.correct_top2


@pytest.mark.parametrize("method, budget", [
    ("stochastic", SearchBudget(samples_per_aug=3)),
    ("beam", SearchBudget(beam_width=2)),
])
def test_other_methods_run(small_task, method, budget):
    cfg = PipelineConfig(gen_augs=2, score_augs=2, method=method, budget=budget)
    r = solve_task(RuleModel("flip", eps=0.1), small_task, cfg)
    assert r.correct_top2 and r.error is None


def test_lower_threshold_never_shrinks_pool(suite):
    sizes = []
    for t in (0.3, 0.1, 0.03):
        cfg = PipelineConfig(gen_augs=4, score_augs=4, budget=SearchBudget(t))
        sizes.append([r.pool_size for r in run_batch(SLIPPY, suite, cfg)[0]])
    for a, b in zip(sizes, sizes[1:]):
        assert all(x <= y for x, y in zip(a, b))


def test_empty_batch():
    results, m = run_batch(SLIPPY, [], PipelineConfig())
    assert results == [] and m.tasks == 0 and m.accuracy == 0.0
    assert metrics_text(results, m, timing=False).splitlines()[0].startswith("task_id,")


def test_worker_count_does_not_change_results(suite):
    cfg = PipelineConfig(gen_augs=4, score_augs=4, seed=5)
    one, m1 = run_batch(SLIPPY, suite, cfg)
    four, m4 = run_batch(SLIPPY, suite, PipelineConfig(gen_augs=4, score_augs=4, seed=5, parallel_tasks=4))
    assert [r.outcome() for r in one] == [r.outcome() for r in four]
    assert metrics_text(one, m1, timing=False) == metrics_text(four, m4, timing=False)


def test_accuracy_matches_recount(suite):
    results, m = run_batch(SLIPPY, suite, PipelineConfig(gen_augs=4, score_augs=4))
    recount = sum(any(g == t.test_outputs[0] for g in r.attempts[0]) for r, t in zip(results, sorted(suite, key=lambda t: t.id)))
    assert m.correct_top2 == recount and m.with_truth == len(suite)
    assert m.accuracy == recount / len(suite)


def test_metrics_file(tmp_path, suite):
    results, m = run_batch(SLIPPY, suite[:3], PipelineConfig(gen_augs=2, score_augs=2))
    write_metrics(results, m, tmp_path / "m.csv")
    lines = (tmp_path / "m.csv").read_text().splitlines()
    assert lines[0] == "task_id,n_candidates,solution_found,selected_rank,correct_top2,gen_ms,score_ms"
    assert len(lines) == 5 and lines[-1].startswith("# tasks=3")
    assert "wall_ms=" in lines[-1]
    untimed = metrics_text(results, m, timing=False).splitlines()
    assert all(row.endswith(",,") for row in untimed[1:-1])


class Broken(Model):
    def session(self):
        raise TransportError("down")


def test_errored_tasks_are_reported_not_raised(small_task):
    results, m = run_batch(Broken(), [small_task], PipelineConfig())
    assert m.errored == 1 and m.with_truth == 1 and m.accuracy == 0.0
    assert "TransportError" in results[0].error
    sub = submission_map(results, [small_task])
    assert sub == {small_task.id: [(None, None)]}


def test_tasks_without_truth(small_task):
    blind = Task(small_task.id, small_task.train, small_task.test_inputs)
    r = solve_task(RuleModel("flip", eps=0.0), blind, PipelineConfig(gen_augs=2, score_augs=2))
    assert r.solution_found is None and r.correct_top2 is None
    assert r.attempts[0][0] == small_task.test_outputs[0]


def test_multiple_test_inputs(small_task):
    two = Task("two", small_task.train, small_task.test_inputs + (G([[5, 6]]),),
               small_task.test_outputs + (G([[6, 5]]),))
    r = solve_task(RuleModel("flip", eps=0.0), two, PipelineConfig(gen_augs=2, score_augs=2))
    assert len(r.attempts) == 2 and r.correct_top2 and r.pool_size == 2


def test_trace_writer(tmp_path, small_task):
    tw = TraceWriter(tmp_path / "t.jsonl")
    run_batch(SLIPPY, [small_task], PipelineConfig(gen_augs=2, score_augs=2), trace=tw)
    tw.close()
    events = [json.loads(l) for l in (tmp_path / "t.jsonl").read_text().splitlines()]
    assert events and set(events[0]) == {"task", "aug", "event", "depth", "cum_logprob"}
    assert {e["event"] for e in events} >= {"expand", "complete"}


def test_config_validation():
    with pytest.raises(ContractError):
        PipelineConfig(method="magic")
    with pytest.raises(ContractError):
        PipelineConfig(aggregation="median")
    with pytest.raises(ContractError):
        PipelineConfig(budget=SearchBudget())
    with pytest.raises(ContractError):
        PipelineConfig(parallel_tasks=0)


def test_derive_seed_is_stable():
    assert derive_seed(0, "a") == derive_seed(0, "a") != derive_seed(1, "a")
    assert 0 <= derive_seed("x") < 2**63


def test_test_time_training_hook(small_task):
    seen = []

    def hook(model, task):
        seen.append(task.id)
        return RuleModel("flip", eps=0.0)

    r = solve_task(TableModel(), small_task, PipelineConfig(gen_augs=2, score_augs=2, ttt_hook=hook))
    assert seen == [small_task.id] and r.correct_top2


def test_summary_counts():
    m = summarize([])
    assert m.found_rate == 0.0
