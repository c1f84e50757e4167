"""Numerical checks of the KL decomposition for geometric-mean (log-linear) pooling.

For experts Q_1..Q_m and pooled Pbar ∝ prod_j Q_j^(1/m) with normalizer Z:

    KL(P || Pbar) = mean_j KL(P || Q_j) + log Z,   log Z <= 0,

with log Z = 0 exactly when all experts coincide.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import logsumexp

from .errors import ContractError, DegenerateEnsembleError

SUM_TOL = 1e-12
RESIDUAL_TOL = 1e-9
LOGZ_TOL = 1e-12


def as_distribution(p, tol: float = SUM_TOL) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if p.ndim != 1 or p.size < 1:
        raise ContractError("a finite distribution is a non-empty 1-D array")
    if np.any(p < 0) or abs(p.sum() - 1.0) > tol:
        raise ContractError(f"not a probability vector (sum {p.sum()!r})")
    return p


def kl(P, Q) -> float:
    """KL(P || Q) in nats; +inf when Q misses mass that P has."""
    P, Q = np.asarray(P, dtype=float), np.asarray(Q, dtype=float)
    if P.shape != Q.shape:
        raise ContractError(f"support mismatch: {P.shape} vs {Q.shape}")
    on = P > 0
    if np.any(Q[on] == 0):
        return math.inf
    return math.fsum(P[on] * (np.log(P[on]) - np.log(Q[on])))


def geometric_pool(experts: Sequence) -> tuple[np.ndarray, float]:
    """Normalized geometric mean of the experts and its log normalizer."""
    E = np.asarray(experts, dtype=float)
    if E.ndim != 2 or E.shape[0] < 1:
        raise ContractError("experts must be an (m, n) array with m >= 1")
    with np.errstate(divide="ignore"):
        mean_log = np.log(E).mean(axis=0)
    if np.all(np.isneginf(mean_log)):
        raise DegenerateEnsembleError("experts share no support; pooled mass is zero")
    log_z = float(logsumexp(mean_log))
    return np.exp(mean_log - log_z), log_z


@dataclass
class EnsembleReport:
    kl_each: np.ndarray
    kl_ensemble: float
    log_Z: float
    residual: float
    identical: bool

    @property
    def finite(self) -> bool:
        return bool(np.all(np.isfinite(self.kl_each)) and math.isfinite(self.kl_ensemble))

    @property
    def bound_holds(self) -> bool:
        return self.kl_ensemble <= self.kl_each.mean() + RESIDUAL_TOL

    @property
    def holds(self) -> bool:
        """Decomposition, sign of log Z and its equality case all check out."""
        if not self.finite:
            return self.log_Z <= LOGZ_TOL
        zero = abs(self.log_Z) <= LOGZ_TOL
        return (
            abs(self.residual) < RESIDUAL_TOL
            and self.log_Z <= LOGZ_TOL
            and zero == self.identical
            and self.bound_holds
        )


def experts_identical(experts, tol: float = LOGZ_TOL) -> bool:
    E = np.asarray(experts, dtype=float)
    return bool(np.all(np.abs(E - E[0]) <= tol))


def verify_theorem(P, experts) -> EnsembleReport:
    P = np.asarray(P, dtype=float)
    E = np.asarray(experts, dtype=float)
    if E.ndim != 2 or E.shape[1] != P.shape[0]:
        raise ContractError("experts and P must share a support")
    pooled, log_z = geometric_pool(E)
    each = np.array([kl(P, q) for q in E])
    ens = kl(P, pooled)
    if math.isfinite(ens) and np.all(np.isfinite(each)):
        residual = ens - (math.fsum(each) / len(each) + log_z)
    else:
        residual = math.nan
    return EnsembleReport(each, ens, log_z, residual, experts_identical(E))


@dataclass
class TrialSummary:
    trials: int
    max_abs_residual: float
    max_log_Z: float
    identical_trials: int
    max_abs_log_Z_identical: float
    min_abs_log_Z_distinct: float
    bound_violations: int
    failures: int

    @property
    def ok(self) -> bool:
        return self.failures == 0


def random_trial(rng: np.random.Generator, m: int, n: int, identical: bool = False):
    P = rng.dirichlet(np.ones(n))
    if identical:
        q = rng.dirichlet(np.ones(n))
        return P, np.tile(q, (m, 1))
    return P, rng.dirichlet(np.ones(n), size=m)


def run_trials(
    trials: int,
    seed: int = 0,
    ms: Sequence[int] = (2, 4, 8, 16),
    n_max: int = 64,
    n_min: int = 2,
    identical_every: int = 10,
    rows: list | None = None,
) -> TrialSummary:
    """Seeded Monte-Carlo over expert counts ``ms`` and supports ``n_min..n_max``.

    Every ``identical_every``-th trial uses identical experts to exercise the
    equality case.
    """
    rng = np.random.default_rng(seed)
    max_res = max_lz_same = 0.0
    max_lz = -math.inf
    min_lz_diff = math.inf
    same = bound = fails = 0
    for t in range(trials):
        m = int(rng.choice(ms))
        n = int(rng.integers(n_min, n_max + 1))
        identical = identical_every > 0 and t % identical_every == 0
        P, E = random_trial(rng, m, n, identical)
        r = verify_theorem(P, E)
        max_res = max(max_res, abs(r.residual))
        max_lz = max(max_lz, r.log_Z)
        if r.identical:
            same += 1
            max_lz_same = max(max_lz_same, abs(r.log_Z))
        else:
            min_lz_diff = min(min_lz_diff, abs(r.log_Z))
        bound += not r.bound_holds
        fails += not r.holds
        if rows is not None:
            rows.append({"trial": t, "m": m, "n": n, "identical": r.identical,
                         "kl_ensemble": r.kl_ensemble, "mean_kl": float(r.kl_each.mean()),
                         "log_Z": r.log_Z, "residual": r.residual})
    return TrialSummary(trials, max_res, max_lz, same, max_lz_same, min_lz_diff, bound, fails)


def write_trials(rows: list[dict], path) -> None:
    if not rows:
        return
    with open(path, "w", newline="") as f:
        w = csv.DictWriter(f, fieldnames=list(rows[0]))
        w.writeheader()
        w.writerows(rows)
