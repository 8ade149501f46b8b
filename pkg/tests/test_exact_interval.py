"""精确线性代数与有理区间"""

from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from src.errors import ModelError
from src.exact import (
    affine_dimension,
    det,
    fraction_str,
    inverse,
    lattice_index,
    rank,
    simplest_between,
    solve,
    to_fraction,
)
from src.interval import RationalInterval, Verdict, decide_le, nth_root, sqrt


@pytest.mark.parametrize("text, expected", [
    ("3/4", Fraction(3, 4)),
    (" -2 ", Fraction(-2)),
    ("10/4", Fraction(5, 2)),
    (7, Fraction(7)),
    (Fraction(1, 3), Fraction(1, 3)),
])
def test_to_fraction_accepts_exact_values(text, expected):
    assert to_fraction(text) == expected


@pytest.mark.parametrize("bad", [0.5, "0.5", "1/0", "abc", True, None])
def test_to_fraction_rejects_inexact_values(bad):
    with pytest.raises(ModelError):
        to_fraction(bad)


def test_fraction_str():
    assert fraction_str(Fraction(6, 3)) == "2"
    assert fraction_str(Fraction(-1, 2)) == "-1/2"


def test_linear_algebra():
    assert det([[2, 1], [1, 2]]) == 3
    assert rank([[1, 2], [2, 4]]) == 1
    assert solve([[1, 1], [1, -1]], [3, 1]) == [2, 1]
    assert solve([[1, 2], [2, 4]], [1, 2]) is None
    assert inverse([[2, 0], [0, 4]]) == [[Fraction(1, 2), 0], [0, Fraction(1, 4)]]
    assert inverse([[1, 1], [1, 1]]) is None


@pytest.mark.parametrize("vectors, expected", [
    ([(1, 0), (0, 1), (1, 1)], 1),
    ([(1, 0), (0, 2)], 2),
    ([(2, 0), (0, 2), (1, 1)], 2),
    ([(1, 1), (2, 2)], 0),
    ([(3,), (5,)], 1),
])
def test_lattice_index(vectors, expected):
    assert lattice_index(vectors, len(vectors[0])) == expected


def test_simplest_between():
    assert simplest_between(Fraction(1, 3), Fraction(1, 2)) == Fraction(1, 2)
    assert simplest_between(Fraction(2, 7), Fraction(3, 10)) == Fraction(2, 7)
    assert simplest_between(Fraction(-1, 2), Fraction(1, 2)) == 0
    assert simplest_between(Fraction(-5, 2), Fraction(-7, 3)) == Fraction(-5, 2)


@given(st.fractions(min_value=-100, max_value=100, max_denominator=1000),
       st.fractions(min_value=0, max_value=10, max_denominator=1000))
def test_simplest_between_stays_inside(lo, width):
    value = simplest_between(lo, lo + width)
    assert lo <= value <= lo + width


def test_affine_dimension():
    assert affine_dimension([]) == -1
    assert affine_dimension([(Fraction(1), Fraction(2))]) == 0
    assert affine_dimension([(0, 0), (1, 1), (2, 2)]) == 1
    assert affine_dimension([(0, 0), (1, 0), (0, 1)]) == 2


# ==================== 区间 ====================

def test_interval_arithmetic():
    a = RationalInterval(1, 2)
    b = RationalInterval(-1, 3)
    assert a * b == RationalInterval(-2, 6)
    assert a - RationalInterval(0, 1) == RationalInterval(0, 2)
    assert abs(RationalInterval(-3, 1)) == RationalInterval(0, 3)
    assert RationalInterval(-2, 1) ** 2 == RationalInterval(0, 4)
    assert 1 / RationalInterval(2, 4) == RationalInterval(Fraction(1, 4), Fraction(1, 2))
    assert (3 - a) == RationalInterval(1, 2)
    with pytest.raises(ZeroDivisionError):
        a / RationalInterval(-1, 1)
    with pytest.raises(ValueError):
        RationalInterval(2, 1)


def test_exact_roots_are_points():
    assert nth_root(4, 2, 64) == RationalInterval.point(2)
    assert nth_root(Fraction(8, 27), 3, 64) == RationalInterval.point(Fraction(2, 3))
    assert nth_root(5, 1, 64) == RationalInterval.point(5)


def test_irrational_root_width():
    root = sqrt(2, 64)
    assert root.width == Fraction(1, 2 ** 64)
    assert root.lo ** 2 <= 2 <= root.hi ** 2


@given(st.integers(min_value=1, max_value=10 ** 6), st.integers(min_value=2, max_value=4),
       st.sampled_from([16, 64, 128]))
def test_nth_root_encloses(value, k, bits):
    root = nth_root(value, k, bits)
    assert root.lo ** k <= value <= root.hi ** k


def _const(value):
    return lambda bits: RationalInterval.point(value)


def test_decide_le():
    root2 = lambda bits: sqrt(2, bits)  # noqa: E731
    assert decide_le(root2, _const(Fraction(3, 2)), 64, 128) == (Verdict.PASS, False)
    assert decide_le(_const(Fraction(3, 2)), root2, 64, 128) == (Verdict.FAIL, False)
    assert decide_le(_const(2), _const(2), 64, 128) == (Verdict.PASS, True)
    assert decide_le(root2, root2, 64, 128) == (Verdict.UNDECIDED, False)
