"""路径分割：折线、区间选择、验证与搜索"""

from fractions import Fraction

import pytest

from src.config import ComputeConfig
from src.errors import BudgetExceeded, ModelError
from src.path_splitting import (
    IntervalSelection,
    Polyline,
    bp_search,
    bp_verify,
    l1_norm,
    linf_norm,
    random_polyline,
)

L_PATH = Polyline((0, 1, 2), ((0, 0), (1, 0), (1, 1)))
SQUARE_PATH = Polyline((0, 2, 4, 6), ((0, 0), (2, 0), (2, 2), (0, 2)))


def test_polyline_interpolation():
    assert L_PATH.length == 2
    assert L_PATH.at(Fraction(1, 2)) == (Fraction(1, 2), 0)
    assert L_PATH.at(Fraction(3, 2)) == (1, Fraction(1, 2))
    assert L_PATH.at(2) == (1, 1)
    assert L_PATH.displacement() == (1, 1)
    with pytest.raises(ModelError):
        L_PATH.at(3)


@pytest.mark.parametrize("params, points", [
    ((0, 1), ((0, 0), (1, 1))),
    ((1, 2), ((0, 0), (1, 0))),
    ((0, 1, 1), ((0, 0), (1, 0), (1, 0))),
    ((0,), ((0, 0),)),
    ((0, 1), ((0, 0), (1,))),
])
def test_invalid_polylines(params, points):
    with pytest.raises(ModelError):
        Polyline(params, points)


def test_polyline_with_other_norms():
    diagonal = ((0, 0), (1, 1))
    assert Polyline((0, 1), diagonal, norm=linf_norm).length == 1
    assert Polyline((0, 2), diagonal, norm=l1_norm).length == 2
    with pytest.raises(ModelError):
        Polyline((0, 1), diagonal, norm=l1_norm)
    with pytest.raises(ModelError):
        Polyline((0, 1), diagonal)


def test_interval_selection_validation():
    assert IntervalSelection(((3, 4), (0, 1))).intervals == ((0, 1), (3, 4))
    assert IntervalSelection(((0, 1), (1, 2))).measure == 2
    with pytest.raises(ModelError):
        IntervalSelection(((0, 2), (1, 3)))
    with pytest.raises(ModelError):
        IntervalSelection(((1, 1),))


def test_verify_accepts_and_rejects():
    good = IntervalSelection(((Fraction(1, 2), Fraction(3, 2)),))
    assert bp_verify(L_PATH, good)
    # 增量之和不对
    assert not bp_verify(L_PATH, IntervalSelection(((0, 1),)))
    # 总长超过 ℓ/2
    assert not bp_verify(SQUARE_PATH, IntervalSelection(((0, 1), (2, 5))))
    # 区间个数超过维数
    assert not bp_verify(L_PATH, IntervalSelection(((0, Fraction(1, 4)), (Fraction(1, 2), Fraction(3, 4)),
                                                    (1, Fraction(5, 4)))))
    with pytest.raises(ModelError):
        bp_verify(L_PATH, IntervalSelection(((1, 3),)))


def test_verify_with_tolerance():
    near = IntervalSelection(((Fraction(1, 2) + Fraction(1, 1000), Fraction(3, 2)),))
    assert not bp_verify(L_PATH, near)
    assert bp_verify(L_PATH, near, tol=Fraction(1, 100))


def test_search_l_path():
    selection = bp_search(L_PATH)
    assert selection.intervals == ((Fraction(1, 2), Fraction(3, 2)),)


def test_search_square_path():
    selection = bp_search(SQUARE_PATH)
    assert bp_verify(SQUARE_PATH, selection)
    assert len(selection.intervals) <= 2


def test_closed_path_needs_no_intervals():
    closed = Polyline((0, 1, 2), ((0, 0), (1, 0), (0, 0)))
    assert bp_search(closed).intervals == ()


@pytest.mark.parametrize("seed", range(10))
def test_search_always_succeeds_in_dimension_one(seed):
    path = random_polyline(seed, dim=1, segments=5)
    assert bp_verify(path, bp_search(path))


def test_random_polyline_is_deterministic():
    assert random_polyline(7) == random_polyline(7)
    path = random_polyline(7, dim=3, segments=6)
    assert (path.dim, path.segments) == (3, 6)


@pytest.mark.slow
def test_search_in_dimension_two():
    config = ComputeConfig(bp_max_depth=4, bp_budget=50_000)
    found = 0
    for seed in range(8):
        path = random_polyline(seed, dim=2, segments=3)
        try:
            selection = bp_search(path, config)
        except BudgetExceeded:
            continue
        assert bp_verify(path, selection)
        found += 1
    assert found >= 1


@pytest.mark.slow
def test_search_on_fifty_random_paths():
    for seed in range(50):
        path = random_polyline(seed, dim=2, segments=4)
        assert bp_verify(path, bp_search(path)), seed
    for seed in range(50):
        path = random_polyline(seed, dim=1, segments=6)
        assert bp_verify(path, bp_search(path)), seed
