import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pxs.augment import (
    GEOMS,
    SWAPS_DIMS,
    Augmentation,
    AugmentationSetSpec,
    apply_to_solution,
    apply_to_task,
    geom_apply,
    geom_compose,
    geom_inverse,
    invert,
    make_augmentation_set,
)
from pxs.errors import ContractError
from pxs.grid import ExamplePair, Grid, Solution, Task

from conftest import G

grids = st.integers(1, 6).flatmap(
    lambda r: st.integers(1, 6).flatmap(
        lambda c: st.lists(st.lists(st.integers(0, 9), min_size=c, max_size=c), min_size=r, max_size=r)
    )
).map(Grid.from_list)
perms = st.permutations(list(range(10))).map(tuple)


@st.composite
def augmentations(draw, k=None):
    order = None if k is None else tuple(draw(st.permutations(list(range(k)))))
    return Augmentation(draw(st.sampled_from(GEOMS)), draw(perms), order)


@st.composite
def tasks(draw):
    k = draw(st.integers(1, 4))
    train = tuple(ExamplePair(draw(grids), draw(grids)) for _ in range(k))
    n_test = draw(st.integers(1, 2))
    ins = tuple(draw(grids) for _ in range(n_test))
    outs = tuple(draw(grids) for _ in range(n_test)) if draw(st.booleans()) else None
    return Task("h", train, ins, outs)


def test_identity_leaves_task_unchanged(small_task):
    assert apply_to_task(Augmentation(), small_task) == small_task


def test_rot90_moves_cells():
    g = G([[1, 2, 3], [4, 5, 6]])
    r = apply_to_solution(Augmentation("r90"), g)
    # counter-clockwise: last column becomes first row
    assert r == G([[3, 6], [2, 5], [1, 4]])
    assert r.shape == (3, 2)


def test_color_swap():
    swap = (0, 2, 1, 3, 4, 5, 6, 7, 8, 9)
    assert apply_to_solution(Augmentation(color_perm=swap), G([[1, 1], [1, 1]])) == G([[2, 2], [2, 2]])


def test_flip_twice_is_identity():
    g = G([[1, 2, 3], [4, 5, 6]])
    fh = Augmentation("fh")
    assert apply_to_solution(fh, apply_to_solution(fh, Solution(g))) == Solution(g)


def test_inverse_examples():
    assert invert(Augmentation("r90")).geom == "r270"
    assert invert(Augmentation()) == Augmentation()
    swap = Augmentation(color_perm=(0, 2, 1, 3, 4, 5, 6, 7, 8, 9))
    assert invert(swap) == swap


def test_group_laws_exhaustive():
    probe = np.arange(12).reshape(3, 4)
    for g, h in itertools.product(GEOMS, GEOMS):
        direct = geom_apply(h, geom_apply(g, probe))
        assert np.array_equal(direct, geom_apply(geom_compose(g, h), probe)), (g, h)
    a = probe
    for _ in range(4):
        a = geom_apply("r90", a)
    assert np.array_equal(a, probe)
    assert geom_compose("tp", "fh") == "r270"
    assert geom_compose("fh", "tp") == "r90"
    assert geom_compose("fh", "fv") == "r180"
    assert geom_compose("tp", "r180") == "atp"
    for g in GEOMS:
        assert geom_compose(g, geom_inverse(g)) == "id"


@pytest.mark.parametrize("g", GEOMS)
def test_dimension_law(g):
    out = geom_apply(g, np.zeros((2, 5)))
    assert out.shape == ((5, 2) if g in SWAPS_DIMS else (2, 5))


def test_example_order_length_mismatch(small_task):
    with pytest.raises(ContractError):
        apply_to_task(Augmentation(example_order=(0, 1, 2)), small_task)


def test_example_order_permutes_train_only(small_task):
    a = Augmentation(example_order=(1, 0))
    t = apply_to_task(a, small_task)
    assert t.train == small_task.train[::-1]
    assert t.test_inputs == small_task.test_inputs


@settings(max_examples=300, deadline=None)
@given(data=st.data(), t=tasks())
def test_task_round_trip(data, t):
    a = data.draw(augmentations(k=t.k))
    assert apply_to_task(invert(a), apply_to_task(a, t)) == t


@settings(max_examples=300, deadline=None)
@given(a=augmentations(), g=grids)
def test_solution_round_trip_and_validity(a, g):
    out = apply_to_solution(a, Solution(g))
    assert isinstance(out.grid, Grid)
    assert sorted(out.grid.shape) == sorted(g.shape)
    assert apply_to_solution(invert(a), out) == Solution(g)


def test_descriptor_round_trip():
    a = Augmentation("r90", (3, 1, 0, 2, 4, 5, 6, 7, 8, 9), (1, 0, 2))
    text = a.describe()
    assert text == "r90:0123456789→3102456789:2,1,3"
    assert Augmentation.parse(text) == a


@pytest.mark.parametrize("count, geoms", [
    (1, ["id"]),
    (2, ["id", "fh"]),
    (4, ["id", "r90", "r180", "r270"]),
    (8, list(GEOMS)),
])
def test_schedule(count, geoms):
    augs = make_augmentation_set(AugmentationSetSpec(count, seed=3), k=3)
    assert [a.geom for a in augs] == geoms


def test_sixteen_uses_each_geom_twice():
    augs = make_augmentation_set(AugmentationSetSpec(16, seed=0), k=4)
    assert len(augs) == 16
    assert all(sum(a.geom == g for a in augs) == 2 for g in GEOMS)
    assert augs[0].is_identity
    # the two copies of each geometry get their own colors
    assert augs[0].color_perm != augs[8].color_perm


def test_count_one_is_full_identity():
    (a,) = make_augmentation_set(AugmentationSetSpec(1, seed=99), k=5)
    assert a.is_identity


def test_same_spec_same_set():
    spec = AugmentationSetSpec(16, seed=11)
    assert make_augmentation_set(spec, 3) == make_augmentation_set(spec, 3)
    assert make_augmentation_set(spec, 3) != make_augmentation_set(AugmentationSetSpec(16, seed=12), 3)


def test_bad_count():
    with pytest.raises(ContractError):
        AugmentationSetSpec(3)
    with pytest.raises(ContractError):
        make_augmentation_set(AugmentationSetSpec(2), k=0)
