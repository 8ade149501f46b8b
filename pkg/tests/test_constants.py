"""显式常数"""

from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from src.constants import (
    L_bound,
    M_const,
    N_threshold,
    ParamSet,
    all_constants,
    almost_isometry_lower,
    almost_isometry_upper,
    annuli_constants,
    c_floor,
    c_full,
    c_simplified,
    constants_discrepancy,
    coset_distance_bound,
    gh_bound,
    index_bound,
    margulis_bounds,
    margulis_lower,
    margulis_upper,
    refined_bound,
    relative_deviation_bound,
    small_case_bound,
    sub_codiameter_bound,
    sublinear_bound,
)
from src.errors import ModelError


@pytest.mark.parametrize("n, D, omega, expected", [
    (1, 1, 2, 3),
    (2, 1, 2, 9),
])
def test_index_bound(n, D, omega, expected):
    assert index_bound(ParamSet(n, D, omega)) == expected


@pytest.mark.parametrize("n, coset, sub", [(1, 9, 10), (2, 27, 28)])
def test_coset_bounds(n, coset, sub):
    params = ParamSet(n, 1, 2)
    assert coset_distance_bound(params) == coset
    assert sub_codiameter_bound(params) == sub


def test_generator_length_bounds():
    assert L_bound(ParamSet(1, 1, 2)) == 1536
    assert L_bound(ParamSet(2, 1, 1)) == 2 ** 20
    assert M_const(ParamSet(1, 1, 2, sigma=1)) == 3072


def test_c_constants():
    params = ParamSet(1, 1, 2)
    assert c_simplified(params) == 31850496
    assert c_floor(1, 1) == 32768
    assert c_floor(1, 1) <= c_simplified(params)
    full = c_full(ParamSet(1, 1, 2, sigma=1))
    assert full.is_point and full.lo == 1474600


def test_n_threshold_is_exact_integer():
    assert N_threshold(ParamSet(1, 1, 2)) == 191102976
    assert isinstance(N_threshold(ParamSet(2, Fraction(1, 3), 5)), int)


def test_component_bounds():
    assert sublinear_bound(1, 2, 8).lo == sublinear_bound(1, 2, 8).hi == 72
    assert refined_bound(1, 2, 1).is_point and refined_bound(1, 2, 1).lo == 18
    assert small_case_bound(1, 1, 1, 0) == 9


def test_misc_bounds():
    assert gh_bound(1, 0, 1) == 2
    assert gh_bound(1, 1, 1) == 3
    assert annuli_constants(1, 2, 3) == (6, 18)
    assert margulis_lower(2, 1, 2) == Fraction(1, 2)
    assert margulis_upper(2, 4).lo == margulis_upper(2, 4).hi == 1


def test_discrepancy_holds_for_small_case():
    finding = constants_discrepancy(ParamSet(1, 1, 2))
    assert finding.holds
    assert "c_full" in finding.detail


@settings(max_examples=30, deadline=None)
@given(
    n=st.integers(1, 3),
    D=st.fractions(Fraction(1, 10), 10),
    omega=st.fractions(Fraction(1, 10), 10),
    factor=st.fractions(Fraction(1, 10), 10),
)
def test_scaling_homogeneity(n, D, omega, factor):
    params = ParamSet(n, D, omega, sigma=D)
    scaled = params.scaled(factor)
    assert scaled.omega_dn == params.omega_dn
    assert c_simplified(scaled) == factor * c_simplified(params)
    assert index_bound(scaled) == index_bound(params)
    assert L_bound(scaled) == L_bound(params)
    assert M_const(scaled) == M_const(params) / factor


@pytest.mark.parametrize("args", [(0, 1, 1), (1, 0, 1), (1, 1, -2), (True, 1, 1), (Fraction(3, 2), 1, 1)])
def test_invalid_parameters(args):
    with pytest.raises(ModelError):
        ParamSet(*args)


def test_from_instance_checks():
    with pytest.raises(ModelError):
        ParamSet.from_instance(1, 1, 2, sigma=3)
    with pytest.raises(ModelError):
        ParamSet.from_instance(2, 1, Fraction(1, 4))
    assert ParamSet.from_instance(2, 1, 2, sigma=1).sigma == 1


def test_sigma_required():
    with pytest.raises(ModelError):
        M_const(ParamSet(1, 1, 2))


def test_all_constants_json():
    data = all_constants(ParamSet(1, 1, 2, sigma=1))
    assert data["index_bound"] == {"value": "3", "digits": 1}
    assert data["c_simplified"]["value"] == "31850496"
    assert {"M", "M_dprime", "M_tprime", "c_full"} <= set(data)
    assert data["finding_c_full_le_c_simplified"]["holds"] is True
    assert "M" not in all_constants(ParamSet(1, 1, 2))


def test_margulis_bounds_rank_one_coincide():
    lower, upper = margulis_bounds(ParamSet(1, 1, 2))
    assert lower.is_point and upper.is_point
    assert lower.lo == upper.lo == 1


def test_margulis_bounds_rank_two():
    lower, upper = margulis_bounds(ParamSet(2, 1, 2))
    assert lower.is_point and lower.lo == Fraction(1, 2)
    assert not upper.is_point
    assert upper.lo ** 2 <= 2 <= upper.hi ** 2
    assert upper.width <= Fraction(1, 2 ** 60)
    _, exact = margulis_bounds(ParamSet(2, 3, 4))
    assert exact.is_point and exact.lo == 1


def test_relative_deviation_bound():
    assert relative_deviation_bound(Fraction(4, 3), 2) == Fraction(2, 3)
    assert relative_deviation_bound(0, 5) == 0
    with pytest.raises(ModelError):
        relative_deviation_bound(1, 0)


def test_almost_isometry_constants():
    assert almost_isometry_upper(0, 1, 1) == 3
    assert almost_isometry_upper(Fraction(1, 2), 2, Fraction(1, 3)) == Fraction(29, 6)
    assert almost_isometry_lower(0, 2, 1) == 6
    assert almost_isometry_lower(1, 1, Fraction(1, 2)) == 3
    with pytest.raises(ModelError):
        almost_isometry_lower(0, 0, 1)


def test_all_constants_reports_almost_isometry():
    data = all_constants(ParamSet(1, 1, 2, sigma=1))
    assert data["almost_isometry_lower"]["value"] == "31850500"
    assert data["almost_isometry_upper"]["value"] == "31850499"
    assert "almost_isometry_upper" not in all_constants(ParamSet(1, 1, 2))
