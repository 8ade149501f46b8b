"""测试公共夹具与暴力对照实现"""

import itertools
from fractions import Fraction

import networkx as nx
import pytest

from src.config import ComputeConfig
from src.gallery import build_cayley_Z, build_rose, build_star_of_loops
from src.periodic_model import Edge, QuotientGraph, vec_add


@pytest.fixture
def rose1():
    return build_rose(1).subject


@pytest.fixture
def rose2():
    return build_rose(2).subject


@pytest.fixture
def cayley3():
    return build_cayley_Z([(1, 1), (3, 1)]).subject


@pytest.fixture
def star2():
    return build_star_of_loops(2).subject


@pytest.fixture
def small_config():
    return ComputeConfig(node_budget=200_000, cycle_cap=20_000)


def two_vertex_graph() -> QuotientGraph:
    """a, b 之间三条平行边，外加 a 上的环"""
    edges = (
        Edge("a", "b", Fraction(1), (0,)),
        Edge("a", "b", Fraction(2), (1,)),
        Edge("a", "b", Fraction(1), (0,)),
        Edge("a", "a", Fraction(5), (2,)),
    )
    return QuotientGraph(1, ("a", "b"), edges, "a")


def materialized_block(g: QuotientGraph, reach: int) -> nx.Graph:
    """覆盖图中层坐标 ‖s‖∞ ≤ reach 的有限块（networkx 图，权重为精确长度）"""
    block = nx.Graph()
    sheets = list(itertools.product(range(-reach, reach + 1), repeat=g.rank))
    for sheet in sheets:
        for edge in g.edges:
            tail = (edge.tail, sheet)
            head = (edge.head, vec_add(sheet, edge.voltage))
            if max(abs(x) for x in head[1]) > reach:
                continue
            if block.has_edge(tail, head):
                weight = min(block[tail][head]["length"], edge.length)
            else:
                weight = edge.length
            block.add_edge(tail, head, length=weight)
    return block


def block_orbit_distances(g: QuotientGraph, radius: Fraction, reach: int) -> dict:
    """块内从 (x₀, 0) 出发、距离 < radius 的轨道点"""
    block = materialized_block(g, reach)
    source = (g.base_vertex, g.zero())
    lengths = nx.single_source_dijkstra_path_length(block, source, weight="length")
    return {
        sheet: dist
        for (vertex, sheet), dist in lengths.items()
        if vertex == g.base_vertex and dist < radius
    }
