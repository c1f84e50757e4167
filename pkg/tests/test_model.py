import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pxs.errors import ContractError
from pxs.grid import ExamplePair, Task
from pxs.model import (
    ModelBackendSpec,
    RuleModel,
    TableModel,
    check_distribution,
    make_backend,
    next_distribution,
    parse_prompt,
    sequence_logprob,
)
from pxs.tokenizer import BOS, DIGIT0, EOS, NL, encode_prompt, encode_solution

from conftest import G

token_lists = st.lists(st.integers(0, 63), max_size=25)


def identity_task():
    return Task("id", (ExamplePair(G([[1, 2], [3, 4]]), G([[1, 2], [3, 4]])),), (G([[5, 6, 7]]),), (G([[5, 6, 7]]),))


def test_table_deterministic_across_instances():
    a = TableModel(seed=7).session().next_distribution([BOS])
    b = TableModel(seed=7).session().next_distribution([BOS])
    assert np.array_equal(a, b)
    assert not np.array_equal(a, TableModel(seed=8).session().next_distribution([BOS]))


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**32), prefix=token_lists)
def test_table_normalized(seed, prefix):
    lp = TableModel(seed=seed).session().next_distribution([BOS] + prefix)
    check_distribution(lp)
    assert abs(np.exp(lp).sum() - 1) < 1e-6


def test_restricted_support():
    m = TableModel(seed=1, support=(EOS, 10, 11))
    lp = m.session().next_distribution([BOS])
    assert set(np.flatnonzero(np.isfinite(lp))) <= {EOS, 10, 11}
    check_distribution(lp)


@settings(max_examples=80, deadline=None)
@given(seed=st.integers(0, 1000), u=token_lists, v=token_lists, w=token_lists)
def test_cache_transparency(seed, u, v, w):
    m = TableModel(seed=seed)
    s = m.session()
    # extend, backtrack to a sibling branch, then compare against fresh sessions
    s.next_distribution([BOS] + u)
    s.next_distribution([BOS] + u + v)
    got = s.next_distribution([BOS] + u + w)
    fresh = m.session().next_distribution([BOS] + u + w)
    assert np.array_equal(got, fresh)
    assert np.array_equal(s.next_distribution([BOS] + u + v), m.session().next_distribution([BOS] + u + v))


def test_prefix_must_start_with_bos():
    s = TableModel().session()
    with pytest.raises(ContractError):
        s.next_distribution([])
    with pytest.raises(ContractError):
        s.next_distribution([EOS])


def test_sequence_logprob_single_step():
    m = TableModel(seed=3)
    s = m.session()
    assert sequence_logprob(s, [BOS], [7]) == next_distribution(m.session(), [BOS])[7]
    with pytest.raises(ContractError):
        sequence_logprob(s, [BOS], [])


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 1000), cont=st.lists(st.integers(0, 63), min_size=2, max_size=20), data=st.data())
def test_chain_rule(seed, cont, data):
    m = TableModel(seed=seed)
    cut = data.draw(st.integers(1, len(cont) - 1))
    prompt = [BOS, 20, 21]
    whole = sequence_logprob(m.session(), prompt, cont)
    parts = sequence_logprob(m.session(), prompt, cont[:cut]) + sequence_logprob(m.session(), prompt + cont[:cut], cont[cut:])
    assert whole == pytest.approx(parts, abs=1e-9)


def test_rule_eps_zero_puts_all_mass_on_answer():
    t = identity_task()
    prompt = encode_prompt(t)
    answer = encode_solution(t.test_outputs[0])
    s = RuleModel("identity", eps=0.0).session()
    for i, tok in enumerate(answer):
        lp = s.next_distribution(prompt + answer[:i])
        assert lp[tok] == 0.0
        assert np.all(np.isneginf(np.delete(lp, tok)))
    assert sequence_logprob(s, prompt, answer) == 0.0
    wrong = encode_solution(G([[5, 6, 8]]))
    assert sequence_logprob(s, prompt, wrong) == -math.inf


def test_rule_eps_point_one():
    t = identity_task()
    prompt = encode_prompt(t)
    lp = RuleModel("identity", eps=0.1).session().next_distribution(prompt)
    assert lp[DIGIT0 + 5] == pytest.approx(math.log(0.9))
    others = np.delete(lp, DIGIT0 + 5)
    assert np.allclose(others, math.log(0.1 / 63))
    check_distribution(lp)


def test_rule_families_infer_from_prompt():
    flip = Task("f", (ExamplePair(G([[1, 2, 3]]), G([[3, 2, 1]])),), (G([[4, 5], [6, 7]]),))
    cmap = Task("c", (ExamplePair(G([[1, 2], [2, 1]]), G([[1, 3], [3, 1]])),), (G([[2, 2, 1]]),))
    for fam, task, want in [("flip", flip, G([[5, 4], [7, 6]])), ("colormap", cmap, G([[3, 3, 1]])),
                            ("auto", flip, G([[5, 4], [7, 6]])), ("auto", cmap, G([[3, 3, 1]]))]:
        m = RuleModel(fam, eps=0.0)
        assert sequence_logprob(m.session(), encode_prompt(task), encode_solution(want)) == 0.0, fam


def test_rule_flip_family_accepts_vertical_mirror():
    t = Task("v", (ExamplePair(G([[1], [2], [3]]), G([[3], [2], [1]])), ExamplePair(G([[1, 2], [3, 4]]), G([[3, 4], [1, 2]]))),
             (G([[5, 6], [7, 8]]),))
    m = RuleModel("hflip", eps=0.0)
    assert sequence_logprob(m.session(), encode_prompt(t), encode_solution(G([[7, 8], [5, 6]]))) == 0.0


def test_rule_outside_output_block_is_uniform():
    lp = RuleModel(eps=0.0).session().next_distribution([BOS, 20])
    assert np.allclose(lp, -math.log(64))


def test_rule_slip_keeps_normalization_and_changes_argmax():
    t = identity_task()
    prompt = encode_prompt(t)
    answer = encode_solution(t.test_outputs[0])
    m = RuleModel("identity", eps=0.05, slip=1.0)
    lp = m.session().next_distribution(prompt)
    check_distribution(lp)
    assert lp[answer[0]] == pytest.approx(math.log(0.95 * 0.4))
    assert np.max(lp) == pytest.approx(math.log(0.95 * 0.6))
    # newline and eos positions never slip
    assert m.session().next_distribution(prompt + answer[:3])[NL] == pytest.approx(math.log(0.95))


def test_parse_prompt(small_task):
    pairs, x = parse_prompt(encode_prompt(small_task)[:-1])
    assert [(a, b) for a, b in pairs] == [(e.input, e.output) for e in small_task.train]
    assert x == small_task.test_inputs[0]


@pytest.mark.parametrize("text, kind, params", [
    ("table:seed=7", "table", {"seed": 7}),
    ("rule:identity,eps=0", "rule", {"family": "identity", "eps": 0.0}),
    ("rule:auto,eps=0.05,slip=0.1", "rule", {"family": "auto", "eps": 0.05, "slip": 0.1}),
    ("remote:http://h:1", "remote", {"url": "http://h:1"}),
])
def test_spec_parsing(text, kind, params):
    spec = ModelBackendSpec.parse(text)
    assert (spec.kind, spec.parameters) == (kind, params)


@pytest.mark.parametrize("text", ["bogus:1", "table:seed=x", "table:color=3", "rule:nonsense", "rule:identity,eps=1.5", "remote:"])
def test_bad_specs(text):
    with pytest.raises(ContractError):
        make_backend(text)
