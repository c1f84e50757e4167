"""Autoregressive next-token models over the 64-token vocabulary.

Every model hands out :class:`EvalSession` objects.  A session holds one token
sequence plus per-position state and extends or truncates it to match each
query, so a depth-first search only pays for tokens it has not seen.  Local
backends implement three hooks (``initial_state``, ``advance``, ``logprobs``);
the remote backend in :mod:`pxs.remote` provides its own session.
"""

from __future__ import annotations

import hashlib
import math
import threading
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ContractError, ParseError
from .grid import Grid
from .tokenizer import BOS, DIGIT0, EOS, IN, OUT, VOCAB_SIZE, decode_grid, encode_solution

NEG_INF = -math.inf
_MASK = (1 << 64) - 1


def _frozen(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


def check_distribution(lp: np.ndarray, tol: float = 1e-6) -> None:
    if lp.shape != (VOCAB_SIZE,):
        raise ValueError(f"expected {VOCAB_SIZE} log-probabilities, got shape {lp.shape}")
    if np.any(lp > 0) or np.any(np.isnan(lp)):
        raise ValueError("log-probabilities must be <= 0")
    if abs(np.exp(lp).sum() - 1.0) > tol:
        raise ValueError(f"distribution sums to {np.exp(lp).sum()}")


class EvalSession:
    """Single-owner evaluation context; not safe to share between threads."""

    def next_distribution(self, prefix: Sequence[int]) -> np.ndarray:
        raise NotImplementedError

    def continuation_logprobs(self, prompt: Sequence[int], continuation: Sequence[int]) -> np.ndarray:
        """Per-token log P(continuation[t] | prompt + continuation[:t])."""
        prompt = list(prompt)
        out = np.empty(len(continuation))
        for t, tok in enumerate(continuation):
            out[t] = self.next_distribution(prompt + list(continuation[:t]))[tok]
        return out

    def stats(self) -> dict:
        return {}


class StepSession(EvalSession):
    def __init__(self, model: LocalModel):
        self.model = model
        self.tokens: list[int] = []
        self.states = [model.initial_state()]
        self.dists: list[np.ndarray | None] = [None]
        self.advanced = 0
        self.evaluated = 0

    def _common(self, prefix: Sequence[int]) -> int:
        toks = self.tokens
        hi = min(len(prefix), len(toks))
        if list(prefix[:hi]) == toks[:hi]:
            return hi
        lo = 0  # prefix[:lo] == toks[:lo] holds, prefix[:hi] does not
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if list(prefix[:mid]) == toks[:mid]:
                lo = mid
            else:
                hi = mid
        return lo

    def _sync(self, prefix: Sequence[int]) -> None:
        c = self._common(prefix)
        if c < len(self.tokens):
            del self.tokens[c:]
            del self.states[c + 1:]
            del self.dists[c + 1:]
        for tok in prefix[c:]:
            self.states.append(self.model.advance(self.states[-1], tok, self.tokens))
            self.tokens.append(tok)
            self.dists.append(None)
            self.advanced += 1

    def next_distribution(self, prefix: Sequence[int]) -> np.ndarray:
        if not prefix or prefix[0] != BOS:
            raise ContractError("prefix must be non-empty and start with bos")
        self._sync(prefix)
        d = self.dists[-1]
        if d is None:
            d = self.dists[-1] = self.model.logprobs(self.states[-1])
            self.evaluated += 1
        return d

    def stats(self):
        return {"advanced": self.advanced, "evaluated": self.evaluated}


class Model:
    kind = "abstract"

    def session(self) -> EvalSession:
        raise NotImplementedError

    def describe(self) -> str:
        return self.kind


class LocalModel(Model):
    def session(self) -> EvalSession:
        return StepSession(self)

    def initial_state(self):
        raise NotImplementedError

    def advance(self, state, token: int, history: list[int]):
        """State after appending ``token`` to ``history`` (history excludes token)."""
        raise NotImplementedError

    def logprobs(self, state) -> np.ndarray:
        raise NotImplementedError


def next_distribution(session: EvalSession, prefix: Sequence[int]) -> np.ndarray:
    return session.next_distribution(prefix)


def sequence_logprob(session: EvalSession, prompt: Sequence[int], continuation: Sequence[int]) -> float:
    if not continuation:
        raise ContractError("continuation must be non-empty")
    steps = session.continuation_logprobs(prompt, continuation)
    if np.any(np.isneginf(steps)):
        return NEG_INF
    return math.fsum(steps)


# ---------------------------------------------------------------------------
# table backend


def _splitmix(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK
    return x ^ (x >> 31)


@dataclass
class TableModel(LocalModel):
    """Pseudo-random autoregressive model: the distribution at a prefix is a
    pure function of ``seed`` and the prefix tokens (a rolling 64-bit hash
    seeds a Dirichlet draw over ``support``)."""

    seed: int = 0
    support: tuple[int, ...] | None = None
    concentration: float = 1.0
    kind = "table"

    def __post_init__(self):
        sup = tuple(range(VOCAB_SIZE)) if self.support is None else tuple(sorted(set(self.support)))
        if not sup or any(not 0 <= t < VOCAB_SIZE for t in sup):
            raise ContractError(f"support must be a non-empty subset of 0..{VOCAB_SIZE - 1}")
        self._support = np.asarray(sup)
        self._alpha = np.full(len(sup), float(self.concentration))

    def initial_state(self):
        return _splitmix(self.seed & _MASK)

    def advance(self, state, token, history):
        return _splitmix(state ^ ((token + 1) * 0xD6E8FEB86659FD93 & _MASK))

    def logprobs(self, state):
        p = np.random.default_rng(state).dirichlet(self._alpha)
        lp = np.full(VOCAB_SIZE, NEG_INF)
        q = p / p.sum()
        # small concentrations can underflow a draw to exactly zero
        lp[self._support] = np.log(q, out=np.full_like(q, NEG_INF), where=q > 0)
        return _frozen(lp)

    def describe(self):
        return f"table:seed={self.seed}"


# ---------------------------------------------------------------------------
# rule backend


def _mirror_h(g: Grid) -> Grid:
    return Grid(tuple(row[::-1] for row in g.cells))


def _mirror_v(g: Grid) -> Grid:
    return Grid(g.cells[::-1])


def _infer_identity(pairs, x):
    return x


def _infer_flip(pairs, x):
    # A left-right mirror becomes a top-bottom one under a quarter turn, so the
    # oracle considers both and keeps the first that explains every train pair.
    for f in (_mirror_h, _mirror_v):
        if all(f(a) == b for a, b in pairs):
            return f(x)
    return None


def _infer_colormap(pairs, x):
    cmap = {}
    for a, b in pairs:
        if a.shape != b.shape:
            return None
        for ra, rb in zip(a.cells, b.cells):
            for u, v in zip(ra, rb):
                if cmap.setdefault(u, v) != v:
                    return None
    return Grid(tuple(tuple(cmap.get(v, v) for v in row) for row in x.cells))


def _infer_auto(pairs, x):
    for infer, check in (
        (_infer_identity, lambda: all(a == b for a, b in pairs)),
        (_infer_flip, lambda: True),
        (_infer_colormap, lambda: True),
    ):
        if check():
            y = infer(pairs, x)
            if y is not None:
                return y
    return None


RULE_FAMILIES = {
    "identity": _infer_identity,
    "flip": _infer_flip,
    "hflip": _infer_flip,
    "horizontal-flip": _infer_flip,
    "colormap": _infer_colormap,
    "color-map": _infer_colormap,
    "auto": _infer_auto,
}

SLIP_SHARE = 0.6


def parse_prompt(history: Sequence[int]):
    """Split a prompt ending just before the final ``O`` into (train pairs, test input).

    Malformed train blocks are skipped; a malformed test block gives ``None``.
    """
    try:
        start = list(history).index(IN)
    except ValueError:
        return [], None
    blocks, cur = [], []
    for tok in history[start:]:
        cur.append(tok)
        if tok == EOS:
            blocks.append(cur)
            cur = []
    pairs = []
    for b in blocks:
        if not b or b[0] != IN or OUT not in b:
            continue
        o = b.index(OUT)
        try:
            pairs.append((decode_grid(b[1:o] + [EOS]), decode_grid(b[o + 1:])))
        except ParseError:
            continue
    if not cur or cur[0] != IN:
        return pairs, None
    try:
        return pairs, decode_grid(cur[1:] + [EOS])
    except ParseError:
        return pairs, None


@dataclass(frozen=True)
class _RuleState:
    pos: int = 0
    open_at: int = -1  # index of the first output token of the open block
    target: tuple[int, ...] | None = None
    digest: bytes = b""


@dataclass
class RuleModel(LocalModel):
    """Synthetic puzzle oracle.

    Inside an output block it infers the transformation from the train pairs
    present in the prompt (per ``family``), then puts ``1 - eps`` on the token
    of the rule-correct answer at that position and spreads ``eps`` evenly over
    the other 63 tokens.  Once a path leaves the answer, later positions keep
    pointing at the answer token with the same index.

    ``slip`` models view-dependent confident mistakes: at each cell, with a
    chance drawn from a hash of the prompt and position, a wrong digit takes
    ``SLIP_SHARE`` of the ``1 - eps`` mass.  Outside output blocks the oracle
    is uniform.
    """

    family: str = "auto"
    eps: float = 0.0
    slip: float = 0.0
    kind = "rule"

    def __post_init__(self):
        if self.family not in RULE_FAMILIES:
            raise ContractError(f"unknown rule family {self.family!r}; known: {sorted(RULE_FAMILIES)}")
        if not 0.0 <= self.eps < 1.0:
            raise ContractError("eps must lie in [0, 1)")
        if not 0.0 <= self.slip <= 1.0:
            raise ContractError("slip must lie in [0, 1]")
        self._targets: dict[bytes, tuple[int, ...] | None] = {}
        self._lock = threading.Lock()
        self._uniform = _frozen(np.full(VOCAB_SIZE, -math.log(VOCAB_SIZE)))
        self._point = [self._peaked(t) for t in range(VOCAB_SIZE)]
        self._slipped: dict[tuple[int, int], np.ndarray] = {}

    def _peaked(self, tok, distractor=None):
        rest = VOCAB_SIZE - (1 if distractor is None else 2)
        with np.errstate(divide="ignore"):
            lp = np.full(VOCAB_SIZE, math.log(self.eps / rest) if self.eps > 0 else NEG_INF)
            if distractor is None:
                lp[tok] = math.log1p(-self.eps)
            else:
                lp[tok] = math.log((1 - self.eps) * (1 - SLIP_SHARE))
                lp[distractor] = math.log((1 - self.eps) * SLIP_SHARE)
        return _frozen(lp)

    def target_for(self, history: Sequence[int]) -> tuple[int, ...] | None:
        key = bytes(history)
        with self._lock:
            if key in self._targets:
                return self._targets[key]
        pairs, x = parse_prompt(history)
        y = None if x is None else RULE_FAMILIES[self.family](pairs, x)
        target = None if y is None else tuple(encode_solution(y))
        with self._lock:
            self._targets[key] = target
        return target

    def initial_state(self):
        return _RuleState()

    def advance(self, state, token, history):
        pos = state.pos + 1
        if token == EOS:
            return _RuleState(pos)
        if token == OUT and state.open_at < 0:
            digest = hashlib.blake2b(bytes(history), digest_size=16).digest()
            return _RuleState(pos, pos, self.target_for(history), digest)
        return _RuleState(pos, state.open_at, state.target, state.digest)

    def _slip_at(self, digest: bytes, i: int, correct: int):
        h = hashlib.blake2b(digest + i.to_bytes(4, "little"), digest_size=16).digest()
        if int.from_bytes(h[:8], "little") / 2.0**64 >= self.slip:
            return None
        others = [d for d in range(DIGIT0, DIGIT0 + 10) if d != correct]
        return others[int.from_bytes(h[8:], "little") % 9]

    def logprobs(self, state):
        if state.open_at < 0 or state.target is None:
            return self._uniform
        i = state.pos - state.open_at
        correct = state.target[i] if i < len(state.target) else EOS
        if self.slip > 0 and DIGIT0 <= correct < DIGIT0 + 10:
            d = self._slip_at(state.digest, i, correct)
            if d is not None:
                key = (correct, d)
                if key not in self._slipped:
                    self._slipped[key] = self._peaked(correct, d)
                return self._slipped[key]
        return self._point[correct]

    def describe(self):
        s = f"rule:{self.family},eps={self.eps:g}"
        return s + (f",slip={self.slip:g}" if self.slip else "")


# ---------------------------------------------------------------------------
# backend construction


@dataclass(frozen=True)
class ModelBackendSpec:
    kind: str
    parameters: dict = field(default_factory=dict)

    @classmethod
    def parse(cls, text: str) -> ModelBackendSpec:
        """``table:seed=N``, ``rule:FAMILY,eps=X[,slip=Y]`` or ``remote:URL``."""
        kind, _, rest = text.partition(":")
        if kind == "remote":
            if not rest:
                raise ContractError("remote backend needs a URL")
            return cls("remote", {"url": rest})
        params: dict = {}
        for i, item in enumerate(p for p in rest.split(",") if p):
            key, eq, val = item.partition("=")
            if not eq:
                if kind == "rule" and i == 0:
                    params["family"] = key
                    continue
                raise ContractError(f"expected key=value in model spec, got {item!r}")
            params[key.strip()] = val.strip()
        if kind == "table":
            conv = {"seed": int, "concentration": float}
        elif kind == "rule":
            conv = {"family": str, "eps": float, "slip": float}
        else:
            raise ContractError(f"unknown model kind {kind!r}")
        unknown = set(params) - set(conv)
        if unknown:
            raise ContractError(f"unknown {kind} parameters: {sorted(unknown)}")
        try:
            return cls(kind, {k: conv[k](v) for k, v in params.items()})
        except ValueError as e:
            raise ContractError(f"bad model spec {text!r}: {e}") from None


def make_backend(spec: ModelBackendSpec | str) -> Model:
    if isinstance(spec, str):
        spec = ModelBackendSpec.parse(spec)
    if spec.kind == "table":
        return TableModel(**spec.parameters)
    if spec.kind == "rule":
        return RuleModel(**spec.parameters)
    if spec.kind == "remote":
        from .remote import RemoteModel

        m = RemoteModel(**spec.parameters)
        m.handshake()
        return m
    raise ContractError(f"unknown model kind {spec.kind!r}")
