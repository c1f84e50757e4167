"""Seeded synthetic puzzle suites with known answers, matched to the rule backend."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .augment import GEOMS, Augmentation, apply_to_task
from .grid import ExamplePair, Grid, Task
from .model import RULE_FAMILIES

SUITE_FAMILIES = ("identity", "flip", "colormap")


def _rule(family: str, x: np.ndarray, a: int, b: int) -> np.ndarray:
    if family == "identity":
        return x.copy()
    if family == "flip":
        return x[:, ::-1].copy()
    y = x.copy()
    y[x == a] = b
    return y


def _random_grid(rng, rows, cols, palette):
    return rng.choice(palette, size=(rows, cols))


def _ambiguous(x: np.ndarray) -> bool:
    # mirror-symmetric or half-turn-symmetric inputs let several rules explain a pair
    return (
        np.array_equal(x, x[:, ::-1])
        or np.array_equal(x, x[::-1, :])
        or np.array_equal(x, np.rot90(x, 2))
    )


def _well_posed(t: Task, family: str, rng) -> bool:
    """The auto-inferring oracle must recover the answer in every D8 frame."""
    infer = RULE_FAMILIES["auto"]
    for g in GEOMS:
        a = Augmentation(g, tuple(int(c) for c in rng.permutation(10)), None)
        at = apply_to_task(a, t)
        pairs = [(e.input, e.output) for e in at.train]
        if infer(pairs, at.test_inputs[0]) != at.test_outputs[0]:
            return False
    return True


def make_task(rng: np.random.Generator, family: str, task_id: str,
              min_side: int = 3, max_side: int = 5, k_range=(2, 4)) -> Task:
    while True:
        k = int(rng.integers(k_range[0], k_range[1] + 1))
        palette = rng.choice(10, size=int(rng.integers(2, 5)), replace=False)
        a, b = int(palette[0]), int(rng.choice([c for c in range(10) if c != palette[0]]))
        grids = []
        for _ in range(k + 1):
            x = _random_grid(rng, int(rng.integers(min_side, max_side + 1)),
                             int(rng.integers(min_side, max_side + 1)), palette)
            x.flat[int(rng.integers(x.size))] = a
            grids.append(x)
        if any(_ambiguous(x) for x in grids):
            continue
        train = tuple(ExamplePair(Grid.from_array(x), Grid.from_array(_rule(family, x, a, b))) for x in grids[:k])
        x = grids[k]
        t = Task(task_id, train, (Grid.from_array(x),), (Grid.from_array(_rule(family, x, a, b)),))
        if _well_posed(t, family, rng):
            return t


def synthetic_suite(n: int = 50, seed: int = 0, families: Sequence[str] = SUITE_FAMILIES,
                    min_side: int = 3, max_side: int = 5) -> list[Task]:
    """``n`` tasks cycling through ``families``, each with one known test output."""
    rng = np.random.default_rng(seed)
    return [
        make_task(rng, families[i % len(families)], f"syn{seed}-{i:03d}-{families[i % len(families)]}",
                  min_side, max_side)
        for i in range(n)
    ]
