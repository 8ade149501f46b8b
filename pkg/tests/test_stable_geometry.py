"""简单环、稳定单位球、体积、格上的范数"""

from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from src import stable_geometry
from src.config import ComputeConfig
from src.errors import BudgetExceeded, ModelError
from src.gallery import all_instances, build_rose, random_instance
from src.invariants import qbd_deviation
from src.periodic_model import QuotientGraph, orbit_ball, orbit_distance, quotient_diameter
from src.stable_geometry import (
    Membership,
    StableBall,
    ball_volume,
    dirichlet_membership,
    linf_space,
    monte_carlo_volume,
    parallelohedron_check,
    polytope_space,
    simple_cycles,
    stable_norm_empirical,
    stable_systole,
    stable_unit_ball,
    weighted_l1_space,
)

from .conftest import two_vertex_graph


# ==================== 简单环 ====================

def test_simple_cycles_with_parallel_edges():
    cycles = simple_cycles(two_vertex_graph())
    expected = [((-1,), 3), ((1,), 3), ((0,), 2), ((0,), 2),
                ((1,), 3), ((-1,), 3), ((2,), 5), ((-2,), 5)]
    assert sorted(cycles) == sorted(expected)


def test_rose_cycles(rose2):
    assert sorted(simple_cycles(rose2)) == [((-1, 0), 1), ((0, -1), 1), ((0, 1), 1), ((1, 0), 1)]


def test_cycle_cap(rose2):
    with pytest.raises(BudgetExceeded) as info:
        simple_cycles(rose2, ComputeConfig(cycle_cap=2))
    assert info.value.resource == "simple_cycles"


# ==================== 稳定单位球 ====================

def test_rose2_ball_is_l1(rose2):
    ball = stable_unit_ball(rose2)
    assert set(ball.facets) == {(1, 1), (1, -1), (-1, 1), (-1, -1)}
    assert set(ball.vertices) == {(1, 0), (-1, 0), (0, 1), (0, -1)}
    assert ball_volume(ball) == 2


def test_cayley_ball(cayley3):
    ball = stable_unit_ball(cayley3)
    assert ball.vertices == ((-3,), (3,))
    assert ball.gauge((1,)) == Fraction(1, 3)
    assert ball_volume(ball) == 6
    assert stable_systole(ball) == (Fraction(1, 3), (1,))


def test_parallel_edges_ball():
    ball = stable_unit_ball(two_vertex_graph())
    assert ball.vertices == ((Fraction(-2, 5),), (Fraction(2, 5),))
    assert ball.gauge((1,)) == Fraction(5, 2)


def test_rank_three_volumes():
    assert ball_volume(stable_unit_ball(build_rose(3).subject)) == Fraction(4, 3)
    assert ball_volume(linf_space(3).ball) == 8


def test_star_ball_and_deviation(star2):
    ball = stable_unit_ball(star2)
    assert ball.gauge((1, 1)) == 2
    assert orbit_distance(star2, (1, 1)) == 22


@pytest.mark.parametrize("seed", range(4))
def test_random_rank_three_ball_is_exact(seed):
    g = random_instance(seed, n=3, max_vertices=3, max_edges=6)
    ball = stable_unit_ball(g)
    for voltage, length in simple_cycles(g):
        if any(voltage):
            assert ball.gauge([Fraction(x) / length for x in voltage]) <= 1
    for vertex in ball.vertices:
        assert ball.gauge(vertex) == 1


def test_stable_norm_empirical_converges(cayley3):
    assert stable_norm_empirical(cayley3, (1,), 30) == Fraction(1, 3)
    with pytest.raises(ModelError):
        stable_norm_empirical(cayley3, (1,), 0)


def test_stable_norm_is_below_distance(rose2):
    ball = stable_unit_ball(rose2)
    for gamma in [(1, 0), (2, -3), (5, 5)]:
        assert ball.gauge(gamma) <= orbit_distance(rose2, gamma)


def test_from_facets_square():
    ball = StableBall.from_facets([(1, 0), (-1, 0), (0, 1), (0, -1), (Fraction(1, 2), 0)], 2)
    assert set(ball.vertices) == {(1, 1), (1, -1), (-1, 1), (-1, -1)}
    assert ball_volume(ball) == 4


def test_from_facets_survives_rejecting_float_prefilter(monkeypatch):
    monkeypatch.setattr(stable_geometry.np.linalg, "solve", lambda a, b: stable_geometry.np.full(len(b), 1e9))
    ball = StableBall.from_facets([(1, 0), (-1, 0), (0, 1), (0, -1)], 2)
    assert set(ball.vertices) == {(1, 1), (1, -1), (-1, 1), (-1, -1)}


@pytest.mark.parametrize("seed, n", [(0, 2), (1, 2), (2, 3), (3, 3)])
def test_vertex_facet_round_trip(seed, n):
    ball = stable_unit_ball(random_instance(seed, n=n, max_vertices=3, max_edges=6))
    again = StableBall.from_facets(ball.facets, n)
    assert again.vertices == ball.vertices
    assert again.facets == ball.facets


def test_degenerate_points_rejected():
    with pytest.raises(ModelError):
        StableBall.from_points([(1, 0)], 2)


def test_scaled_ball(rose2):
    ball = stable_unit_ball(rose2).scaled(2)
    assert ball_volume(ball) == 8
    assert ball.gauge((1, 1)) == 1


_L1 = StableBall.from_points([(1, 0), (0, 1)], 2)


@settings(max_examples=50, deadline=None)
@given(
    x=st.tuples(st.fractions(-10, 10), st.fractions(-10, 10)),
    y=st.tuples(st.fractions(-10, 10), st.fractions(-10, 10)),
    k=st.fractions(0, 10),
)
def test_gauge_is_a_norm(x, y, k):
    assert _L1.gauge(x) == abs(x[0]) + abs(x[1])
    assert _L1.gauge(tuple(k * a for a in x)) == k * _L1.gauge(x)
    assert _L1.gauge(tuple(a + b for a, b in zip(x, y))) <= _L1.gauge(x) + _L1.gauge(y)


def test_monte_carlo_agrees_with_exact(rose2):
    ball = stable_unit_ball(rose2)
    estimate, error = monte_carlo_volume(ball, samples=20_000, seed=1)
    assert abs(estimate - 2) < 5 * error + 0.01


# ==================== 格上的范数 ====================

def test_l1_systole():
    assert stable_systole(_L1) == (1, (0, 1))


@pytest.mark.parametrize("ball, basis, expected", [
    (linf_space(2, Fraction(1, 2)).ball, None, True),
    (linf_space(2).ball, None, False),
    (linf_space(2).ball, [[2, 0], [0, 2]], True),
    (_L1, None, False),
    (StableBall.from_points([(1, 0), (0, 1), (1, 1)], 2), [[2, 1], [1, 2]], True),
])
def test_parallelohedron(ball, basis, expected):
    assert parallelohedron_check(ball, basis) is expected


def test_hexagon_area():
    hexagon = StableBall.from_points([(1, 0), (0, 1), (1, 1)], 2)
    assert ball_volume(hexagon) == 3


@pytest.mark.parametrize("point, expected", [
    ((0, 0), Membership.INTERIOR),
    ((Fraction(1, 4), Fraction(1, 4)), Membership.INTERIOR),
    ((Fraction(1, 2), 0), Membership.BOUNDARY),
    ((Fraction(3, 4), 0), Membership.EXTERIOR),
])
def test_dirichlet_membership(point, expected):
    space = linf_space(2)
    assert dirichlet_membership(space.ball, space.basis, point) == expected


def test_space_codiameters():
    assert linf_space(2).codiameter() == Fraction(1, 2)
    assert weighted_l1_space([1, 2]).codiameter() == Fraction(3, 2)
    assert polytope_space([(1, 0), (0, 1), (1, 1)], basis=[[2, 1], [1, 2]]).codiameter() is None
    assert polytope_space([(1, 0), (0, 1)], codiameter=1).codiameter() == 1


def test_space_rejects_singular_basis():
    with pytest.raises(ModelError):
        linf_space(2, basis=[[1, 2], [2, 4]])
    with pytest.raises(ModelError):
        weighted_l1_space([1, 0])


# ==================== 次可加极限 ====================

def _distances_along(g, gamma, kmax=64):
    """d(0, kγ), k = 1..kmax；一次 Dijkstra 覆盖大部分，缺的单独计算"""
    last = orbit_distance(g, tuple(kmax * x for x in gamma))
    table = orbit_ball(g, last + 1)
    distances = {}
    for k in range(1, kmax + 1):
        key = tuple(k * x for x in gamma)
        distances[k] = table[key] if key in table else orbit_distance(g, key)
    return distances


def _units(n):
    return [tuple(int(i == j) for j in range(n)) for i in range(n)]


def _check_fekete(g, ball, gamma):
    distances = _distances_along(g, gamma)
    gauge = ball.gauge(gamma)
    for k, dist in distances.items():
        assert gauge <= dist / k
    for k in (1, 2, 4, 8, 16, 32):
        assert distances[2 * k] / (2 * k) <= distances[k] / k
    return distances


@pytest.mark.parametrize(
    "instance",
    [i for i in all_instances() if isinstance(i.subject, QuotientGraph) and i.subject.rank <= 2],
    ids=lambda i: i.name,
)
def test_fekete_and_deviation_on_gallery_graphs(instance):
    g = instance.subject
    ball = stable_unit_ball(g)
    deviation, _ = qbd_deviation(g, max(Fraction(15), 4 * quotient_diameter(g)), ball)
    for gamma in _units(g.rank):
        distances = _check_fekete(g, ball, gamma)
        assert abs(distances[64] / 64 - ball.gauge(gamma)) <= deviation / 64


@pytest.mark.slow
@pytest.mark.parametrize("seed", range(25))
def test_fekete_on_random_graphs(seed):
    g = random_instance(seed, n=2)
    ball = stable_unit_ball(g)
    for gamma in _units(2):
        _check_fekete(g, ball, gamma)
