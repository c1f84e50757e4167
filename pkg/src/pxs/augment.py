"""Invertible task transforms: D8 symmetries, color permutations, example reorderings."""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product

import numpy as np

from .errors import ContractError
from .grid import ExamplePair, Grid, Solution, Task

# Rotations are counter-clockwise (np.rot90). "fh" mirrors left-right, "fv" top-bottom,
# "tp" is the main-diagonal transpose and "atp" the anti-diagonal one.
GEOMS = ("id", "r90", "r180", "r270", "fh", "fv", "tp", "atp")

_ACTIONS = {
    "id": lambda a: a,
    "r90": lambda a: np.rot90(a, 1),
    "r180": lambda a: np.rot90(a, 2),
    "r270": lambda a: np.rot90(a, 3),
    "fh": lambda a: a[:, ::-1],
    "fv": lambda a: a[::-1, :],
    "tp": lambda a: a.T,
    "atp": lambda a: np.rot90(a, 2).T,
}

SWAPS_DIMS = frozenset({"r90", "r270", "tp", "atp"})


def geom_apply(g: str, a: np.ndarray) -> np.ndarray:
    return _ACTIONS[g](a)


def _identify(a: np.ndarray, probe: np.ndarray) -> str:
    for g in GEOMS:
        b = geom_apply(g, probe)
        if b.shape == a.shape and np.array_equal(a, b):
            return g
    raise AssertionError("not a D8 image")


def _build_tables():
    # A 2x3 probe with distinct entries has trivial stabilizer, so its image pins the element.
    probe = np.arange(6).reshape(2, 3)
    compose = {}
    for g, h in product(GEOMS, GEOMS):
        compose[g, h] = _identify(geom_apply(h, geom_apply(g, probe)), probe)
    inverse = {g: next(h for h in GEOMS if compose[g, h] == "id") for g in GEOMS}
    return compose, inverse


_COMPOSE, _INVERSE = _build_tables()


def geom_compose(g: str, h: str) -> str:
    """Element equal to applying ``g`` first, then ``h``."""
    return _COMPOSE[g, h]


def geom_inverse(g: str) -> str:
    return _INVERSE[g]


IDENTITY_COLORS = tuple(range(10))


@dataclass(frozen=True)
class Augmentation:
    geom: str = "id"
    color_perm: tuple[int, ...] = IDENTITY_COLORS
    # 0-based: augmented train[i] is original train[example_order[i]]; None means keep order
    example_order: tuple[int, ...] | None = None

    def __post_init__(self):
        if self.geom not in GEOMS:
            raise ContractError(f"unknown geometry {self.geom!r}")
        if sorted(self.color_perm) != list(range(10)):
            raise ContractError(f"color_perm {self.color_perm} is not a permutation of 0..9")
        if self.example_order is not None and sorted(self.example_order) != list(range(len(self.example_order))):
            raise ContractError(f"example_order {self.example_order} is not a permutation")

    @property
    def is_identity(self) -> bool:
        order_id = self.example_order is None or self.example_order == tuple(range(len(self.example_order)))
        return self.geom == "id" and self.color_perm == IDENTITY_COLORS and order_id

    def apply_grid(self, g: Grid) -> Grid:
        a = np.asarray(self.color_perm)[g.array()]
        return Grid.from_array(geom_apply(self.geom, a))

    def describe(self) -> str:
        order = self.example_order if self.example_order is not None else ()
        return "{}:{}→{}:{}".format(
            self.geom,
            "".join(map(str, IDENTITY_COLORS)),
            "".join(map(str, self.color_perm)),
            ",".join(str(i + 1) for i in order),
        )

    @classmethod
    def parse(cls, text: str) -> Augmentation:
        try:
            geom, colors, order = text.split(":")
            src, dst = colors.split("→")
            src_i, dst_i = [int(c) for c in src], [int(c) for c in dst]
            perm = [0] * 10
            for s, d in zip(src_i, dst_i, strict=True):
                perm[s] = d
            ex = tuple(int(i) - 1 for i in order.split(",")) if order else None
        except ValueError as e:
            raise ContractError(f"bad augmentation descriptor {text!r}: {e}") from None
        return cls(geom, tuple(perm), ex)


IDENTITY = Augmentation()


def apply_to_task(a: Augmentation, p: Task) -> Task:
    train = p.train
    if a.example_order is not None:
        if len(a.example_order) != len(train):
            raise ContractError(
                f"example_order has {len(a.example_order)} entries, task {p.id!r} has {len(train)} train pairs"
            )
        train = tuple(train[i] for i in a.example_order)
    return Task(
        p.id,
        tuple(ExamplePair(a.apply_grid(e.input), a.apply_grid(e.output)) for e in train),
        tuple(a.apply_grid(g) for g in p.test_inputs),
        None if p.test_outputs is None else tuple(a.apply_grid(g) for g in p.test_outputs),
    )


def apply_to_solution(a: Augmentation, s: Solution | Grid):
    if isinstance(s, Grid):
        return a.apply_grid(s)
    return Solution(a.apply_grid(s.grid))


def invert(a: Augmentation) -> Augmentation:
    colors = tuple(int(i) for i in np.argsort(a.color_perm))
    order = None if a.example_order is None else tuple(int(i) for i in np.argsort(a.example_order))
    return Augmentation(geom_inverse(a.geom), colors, order)


GEOM_SCHEDULE = {
    1: ("id",),
    2: ("id", "fh"),
    4: ("id", "r90", "r180", "r270"),
    8: GEOMS,
    16: GEOMS + GEOMS,
}


@dataclass(frozen=True)
class AugmentationSetSpec:
    count: int = 16
    seed: int = 0

    def __post_init__(self):
        if self.count not in GEOM_SCHEDULE:
            raise ContractError(f"augmentation count must be one of {sorted(GEOM_SCHEDULE)}, got {self.count}")


def make_augmentation_set(spec: AugmentationSetSpec, k: int) -> list[Augmentation]:
    """Element 0 is the pure identity; the rest draw color and order from ``spec.seed``."""
    if k < 1:
        raise ContractError("need at least one train example")
    rng = np.random.default_rng(spec.seed)
    out = [Augmentation(example_order=tuple(range(k)))]
    for geom in GEOM_SCHEDULE[spec.count][1:]:
        colors = tuple(int(c) for c in rng.permutation(10))
        order = tuple(int(i) for i in rng.permutation(k))
        out.append(Augmentation(geom, colors, order))
    return out
