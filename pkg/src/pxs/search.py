"""Candidate generation: threshold DFS, greedy, multinomial sampling and beam search.

All strategies return continuations only (the prompt is not repeated) and
carry the exact model log-probability of each continuation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import ContractError
from .model import EvalSession, Model
from .tokenizer import BOS, EOS

MAX_SOLUTION_TOKENS = 30 * 31 + 1


@dataclass(frozen=True)
class SearchBudget:
    threshold: float | None = None
    max_len: int | None = None
    samples_per_aug: int = 1
    beam_width: int = 1

    def __post_init__(self):
        if self.threshold is not None and not 0.0 < self.threshold <= 1.0:
            raise ContractError(f"threshold must lie in (0, 1], got {self.threshold}")
        if self.samples_per_aug < 1 or self.beam_width < 1:
            raise ContractError("samples_per_aug and beam_width must be >= 1")

    def limit(self, prompt_len: int) -> int:
        """Maximum total sequence length, prompt included."""
        max_len = self.max_len if self.max_len is not None else prompt_len + MAX_SOLUTION_TOKENS
        if max_len <= prompt_len:
            raise ContractError(f"max_len {max_len} does not exceed prompt length {prompt_len}")
        return max_len


@dataclass(frozen=True)
class RawCandidate:
    tokens: tuple[int, ...]
    gen_logprob: float
    source_aug: int = 0
    truncated: bool = False


Trace = Callable[[str, int, float], None]


def _session(model) -> EvalSession:
    return model if isinstance(model, EvalSession) else model.session()


def _check_prompt(prompt):
    if not prompt or prompt[0] != BOS:
        raise ContractError("prompt must start with bos")


def dfs_sample(
    model: Model | EvalSession,
    prompt: Sequence[int],
    budget: SearchBudget,
    initial_guess: Sequence[int] | None = None,
    source_aug: int = 0,
    trace: Trace | None = None,
) -> list[RawCandidate]:
    """Every continuation whose probability stays strictly above ``budget.threshold``.

    Children are visited in descending probability.  When ``initial_guess``
    itself clears the threshold it is scored in one pass and its path is
    explored first; the returned set does not depend on it.
    """
    if budget.threshold is None:
        raise ContractError("dfs needs a threshold")
    _check_prompt(prompt)
    prompt = list(prompt)
    max_len = budget.limit(len(prompt))
    floor = math.log(budget.threshold)
    sess = _session(model)

    guess = None
    if initial_guess:
        guess = list(initial_guess)[: max_len - len(prompt)]
        steps = sess.continuation_logprobs(prompt, guess)
        if not (np.all(np.isfinite(steps)) and math.fsum(steps) > floor):
            guess = None

    out: list[RawCandidate] = []
    # Each frame: (continuation so far, cumulative logprob, still on the guess path)
    stack = [([], 0.0, guess is not None)]
    while stack:
        cont, score, on_guess = stack.pop()
        if (cont and cont[-1] == EOS) or len(prompt) + len(cont) >= max_len:
            truncated = not cont or cont[-1] != EOS
            out.append(RawCandidate(tuple(cont), score, source_aug, truncated))
            if trace:
                trace("complete", len(cont), score)
            continue
        lp = sess.next_distribution(prompt + cont)
        if trace:
            trace("expand", len(cont), score)
        nxt = score + lp
        keep = np.flatnonzero(nxt > floor)
        if trace and len(keep) < np.count_nonzero(np.isfinite(nxt)):
            trace("prune", len(cont) + 1, score)
        # stable descending order, ties by token id
        order = keep[np.argsort(-nxt[keep], kind="stable")]
        preferred = guess[len(cont)] if on_guess and len(cont) < len(guess) else None
        children = [t for t in order.tolist() if t != preferred]
        if preferred is not None and preferred in keep:
            children.insert(0, preferred)
        # push in reverse so the first child is explored first
        for t in reversed(children):
            stack.append((cont + [t], float(score + lp[t]), t == preferred))
    return out


def greedy_sample(model, prompt, budget: SearchBudget, source_aug: int = 0) -> list[RawCandidate]:
    _check_prompt(prompt)
    prompt = list(prompt)
    max_len = budget.limit(len(prompt))
    sess = _session(model)
    cont: list[int] = []
    score = 0.0
    while len(prompt) + len(cont) < max_len:
        lp = sess.next_distribution(prompt + cont)
        t = int(np.argmax(lp))
        cont.append(t)
        score += float(lp[t])
        if t == EOS:
            break
    return [RawCandidate(tuple(cont), score, source_aug, cont[-1] != EOS)]


def stochastic_sample(model, prompt, budget: SearchBudget, seed=0, source_aug: int = 0) -> list[RawCandidate]:
    """``samples_per_aug`` temperature-1 rollouts, duplicates merged."""
    _check_prompt(prompt)
    prompt = list(prompt)
    max_len = budget.limit(len(prompt))
    rng = np.random.default_rng(seed)
    sess = _session(model)
    seen: dict[tuple[int, ...], RawCandidate] = {}
    for _ in range(budget.samples_per_aug):
        cont: list[int] = []
        score = 0.0
        while len(prompt) + len(cont) < max_len:
            lp = sess.next_distribution(prompt + cont)
            p = np.exp(lp)
            t = int(rng.choice(len(p), p=p / p.sum()))
            cont.append(t)
            score += float(lp[t])
            if t == EOS:
                break
        key = tuple(cont)
        if key not in seen:
            seen[key] = RawCandidate(key, score, source_aug, cont[-1] != EOS)
    return list(seen.values())


def beam_sample(model, prompt, budget: SearchBudget, source_aug: int = 0) -> list[RawCandidate]:
    """Length-unnormalized beam search.

    Each step keeps the ``beam_width`` best expansions of the live beams;
    those ending in eos (or hitting ``max_len``) retire into the result.
    """
    _check_prompt(prompt)
    prompt = list(prompt)
    max_len = budget.limit(len(prompt))
    width = budget.beam_width
    sess = _session(model)
    live: list[tuple[float, tuple[int, ...]]] = [(0.0, ())]
    done: list[RawCandidate] = []
    while live and len(done) < width:
        expansions = []
        for score, cont in live:
            lp = sess.next_distribution(prompt + list(cont))
            for t in np.flatnonzero(np.isfinite(lp)).tolist():
                expansions.append((score + float(lp[t]), cont + (t,)))
        expansions.sort(key=lambda e: (-e[0], e[1]))
        live = []
        for score, cont in expansions[:width]:
            if cont[-1] == EOS or len(prompt) + len(cont) >= max_len:
                done.append(RawCandidate(cont, score, source_aug, cont[-1] != EOS))
            else:
                live.append((score, cont))
    done.sort(key=lambda c: (-c.gen_logprob, c.tokens))
    return done[:width]
