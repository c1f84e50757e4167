"""Synthetic noised-expert studies comparing aggregation rules.

Each simulated task has ``n`` candidates with a true log-distribution; the
true answer is its mode.  Every expert sees the true log-probabilities plus
independent Gaussian noise of scale ``noise`` and renormalizes, mimicking one
augmented view of an imperfect model.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import log_softmax

from .scorer import AGGREGATIONS, aggregate


def draw_ensembles(rng: np.random.Generator, tasks: int, m: int, n: int, spread: float, noise: float):
    """Returns (expert log-probs of shape (tasks, n, m), index of the true answer per task)."""
    true_logits = spread * rng.standard_normal((tasks, n))
    truth = np.argmax(true_logits, axis=1)
    noisy = true_logits[:, None, :] + noise * rng.standard_normal((tasks, m, n))
    experts = log_softmax(noisy, axis=2)
    return np.transpose(experts, (0, 2, 1)), truth


def top2_accuracy(L: np.ndarray, truth: np.ndarray, rule: str) -> float:
    tasks, n, m = L.shape
    scores = aggregate(L.reshape(tasks * n, m), rule).reshape(tasks, n)
    true_score = scores[np.arange(len(truth)), truth]
    better = np.sum(scores > true_score[:, None], axis=1)
    return float(np.mean(better < 2))


@dataclass
class DominanceResult:
    trials: int
    accuracies: dict  # rule -> array of per-trial accuracies
    product_wins: int  # trials where product >= every other rule

    def mean(self, rule: str) -> float:
        return float(np.mean(self.accuracies[rule]))


def product_dominance_study(trials: int = 100, seed: int = 0, tasks: int = 400, m: int = 16,
                            n: int = 8, spread: float = 1.0, noise: float = 2.0) -> DominanceResult:
    rng = np.random.default_rng(seed)
    acc = {r: np.empty(trials) for r in AGGREGATIONS}
    wins = 0
    for t in range(trials):
        L, truth = draw_ensembles(rng, tasks, m, n, spread, noise)
        for r in AGGREGATIONS:
            acc[r][t] = top2_accuracy(L, truth, r)
        wins += all(acc["product"][t] >= acc[r][t] for r in AGGREGATIONS)
    return DominanceResult(trials, acc, wins)


def rank_study(seed: int = 0, tasks: int = 2000, m: int = 16, n: int = 8,
               spread: float = 1.0, noise: float = 2.0) -> tuple[float, float]:
    """Mean rank of the truth under the product rule and under one random expert."""
    rng = np.random.default_rng(seed)
    L, truth = draw_ensembles(rng, tasks, m, n, spread, noise)
    idx = np.arange(tasks)
    product = L.sum(axis=2)
    single = L[idx, :, rng.integers(m, size=tasks)]

    def mean_rank(scores):
        true_score = scores[idx, truth]
        return float(np.mean(1 + np.sum(scores > true_score[:, None], axis=1)))

    return mean_rank(product), mean_rank(single)
