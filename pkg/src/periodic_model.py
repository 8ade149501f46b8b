"""
PeriodicMetrics - 周期度量图模型
用电压图表示 ℤⁿ 周期长度空间，在导出的阿贝尔覆盖上做精确度量查询
"""

import heapq
import itertools
import logging
import math
from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property, lru_cache
from typing import Callable, Dict, Iterator, List, Optional, Sequence, Tuple

import networkx as nx

from . import exact
from .config import ComputeConfig, DEFAULT_COMPUTE_CONFIG
from .errors import BudgetExceeded, ModelError
from .exact import LatticeVector
from .interval import RationalInterval, Verdict, decide_le

logger = logging.getLogger(__name__)

# 覆盖图上的状态: (顶点, 层)
CoverState = Tuple[str, LatticeVector]


def vec_add(a: Sequence[int], b: Sequence[int]) -> LatticeVector:
    return tuple(x + y for x, y in zip(a, b))


def vec_sub(a: Sequence[int], b: Sequence[int]) -> LatticeVector:
    return tuple(x - y for x, y in zip(a, b))


def vec_neg(a: Sequence[int]) -> LatticeVector:
    return tuple(-x for x in a)


def vec_scale(k: int, a: Sequence[int]) -> LatticeVector:
    return tuple(k * x for x in a)


def zero_vector(n: int) -> LatticeVector:
    return (0,) * n


@dataclass(frozen=True)
class Edge:
    """有向存储的边，反向走时电压取负、长度不变"""
    tail: str
    head: str
    length: Fraction
    voltage: LatticeVector

    def __post_init__(self):
        object.__setattr__(self, "length", Fraction(self.length))
        object.__setattr__(self, "voltage", tuple(int(x) for x in self.voltage))


@dataclass(frozen=True)
class QuotientGraph:
    """
    商图（电压图）

    - rank: 格的秩 n
    - vertices: 顶点 id
    - edges: (起点, 终点, 长度, 电压)
    - base_vertex: 轨道基点 x₀ 所在顶点
    """
    rank: int
    vertices: Tuple[str, ...]
    edges: Tuple[Edge, ...]
    base_vertex: str

    def __post_init__(self):
        object.__setattr__(self, "vertices", tuple(self.vertices))
        object.__setattr__(self, "edges", tuple(self.edges))

    @cached_property
    def adjacency(self) -> Dict[str, List[Tuple[str, Fraction, LatticeVector, int]]]:
        """邻接表: 顶点 -> [(邻点, 长度, 有向电压, 边序号)]，环边出现两次（两个方向）"""
        adj: Dict[str, List[Tuple[str, Fraction, LatticeVector, int]]] = {v: [] for v in self.vertices}
        for index, edge in enumerate(self.edges):
            if edge.tail not in adj or edge.head not in adj:
                continue
            adj[edge.tail].append((edge.head, edge.length, edge.voltage, index))
            adj[edge.head].append((edge.tail, edge.length, vec_neg(edge.voltage), index))
        return adj

    @cached_property
    def min_edge_length(self) -> Fraction:
        return min(edge.length for edge in self.edges)

    def zero(self) -> LatticeVector:
        return zero_vector(self.rank)

    def to_networkx(self) -> nx.MultiGraph:
        graph = nx.MultiGraph()
        graph.add_nodes_from(self.vertices)
        for index, edge in enumerate(self.edges):
            graph.add_edge(edge.tail, edge.head, key=index, length=edge.length)
        return graph

    def scaled(self, factor: Fraction) -> "QuotientGraph":
        """所有边长乘以 factor"""
        factor = Fraction(factor)
        if factor <= 0:
            raise ModelError(f"缩放因子必须为正: {factor}")
        edges = tuple(Edge(e.tail, e.head, e.length * factor, e.voltage) for e in self.edges)
        return QuotientGraph(self.rank, self.vertices, edges, self.base_vertex)

    def subdivided(self, parts: int) -> "QuotientGraph":
        """每条边等分成 parts 段（新增顶点，电压放在第一段）"""
        if parts < 1:
            raise ModelError("细分段数必须 ≥ 1")
        vertices = list(self.vertices)
        edges: List[Edge] = []
        for index, edge in enumerate(self.edges):
            piece = edge.length / parts
            chain = [edge.tail] + [f"{edge.tail}~{index}~{j}" for j in range(1, parts)] + [edge.head]
            vertices.extend(chain[1:-1])
            for j in range(parts):
                voltage = edge.voltage if j == 0 else self.zero()
                edges.append(Edge(chain[j], chain[j + 1], piece, voltage))
        return QuotientGraph(self.rank, tuple(vertices), tuple(edges), self.base_vertex)


@dataclass(frozen=True)
class CoverPoint:
    """覆盖图上的点；edge/t 给出时表示边内部的点（t ∈ (0,1)，从 tail 量起）"""
    vertex: str
    sheet: LatticeVector
    edge: Optional[int] = None
    t: Optional[Fraction] = None

    def __post_init__(self):
        if self.edge is not None:
            t = Fraction(self.t)
            if not 0 < t < 1:
                raise ModelError(f"边内参数必须在 (0,1) 内: {t}")
            object.__setattr__(self, "t", t)

    def translate(self, gamma: LatticeVector) -> "CoverPoint":
        """甲板变换 γ.(v, s) = (v, s+γ)"""
        return CoverPoint(self.vertex, vec_add(self.sheet, gamma), self.edge, self.t)


# ==================== 校验 ====================

def _cycle_voltages(g: QuotientGraph) -> List[LatticeVector]:
    """生成树（BFS）外每条边给出一个基本环的电压"""
    potential: Dict[str, LatticeVector] = {g.base_vertex: g.zero()}
    tree_edges = set()
    queue = deque([g.base_vertex])
    while queue:
        v = queue.popleft()
        for w, _, voltage, index in g.adjacency[v]:
            if w not in potential:
                potential[w] = vec_add(potential[v], voltage)
                tree_edges.add(index)
                queue.append(w)
    voltages = []
    for index, edge in enumerate(g.edges):
        if index in tree_edges or edge.tail not in potential or edge.head not in potential:
            continue
        voltages.append(vec_sub(vec_add(potential[edge.tail], edge.voltage), potential[edge.head]))
    return voltages


def validate(g: QuotientGraph) -> List[str]:
    """
    检查商图的合法性

    Returns:
        违反的约束列表，合法时为空列表（不抛异常）
    """
    problems: List[str] = []
    if g.rank < 1:
        problems.append(f"rank {g.rank} < 1")
    if not g.vertices:
        problems.append("no vertices")
        return problems
    if len(set(g.vertices)) != len(g.vertices):
        problems.append("duplicate vertex ids")
    vertex_set = set(g.vertices)
    if g.base_vertex not in vertex_set:
        problems.append(f"base vertex {g.base_vertex!r} not in vertices")
    if not g.edges:
        problems.append("no edges")

    for index, edge in enumerate(g.edges):
        if edge.tail not in vertex_set or edge.head not in vertex_set:
            problems.append(f"edge {index}: unknown endpoint")
        if edge.length <= 0:
            problems.append(f"edge {index}: nonpositive length {exact.fraction_str(edge.length)}")
        if len(edge.voltage) != g.rank:
            problems.append(f"edge {index}: voltage dimension {len(edge.voltage)} != rank {g.rank}")
    if problems:
        return problems

    if not nx.is_connected(g.to_networkx()):
        problems.append("quotient graph not connected")
        return problems

    voltages = _cycle_voltages(g)
    voltage_rank = exact.rank(voltages) if voltages else 0
    if voltage_rank < g.rank:
        problems.append(f"voltage rank {voltage_rank} < {g.rank}")
    else:
        index = exact.lattice_index(voltages, g.rank)
        if index > 1:
            problems.append(f"voltage lattice index {index} > 1")
    return problems


def require_valid(g: QuotientGraph):
    problems = validate(g)
    if problems:
        raise ModelError("非法商图: " + "; ".join(problems))


def as_lattice_vector(g: QuotientGraph, gamma: Sequence[int]) -> LatticeVector:
    gamma = tuple(int(x) for x in gamma)
    if len(gamma) != g.rank:
        raise ModelError(f"格向量维数 {len(gamma)} 与秩 {g.rank} 不符")
    return gamma


# ==================== 覆盖图 Dijkstra ====================

def iter_cover_dijkstra(
    g: QuotientGraph,
    sources: Dict[CoverState, Fraction],
    bound: Optional[Fraction] = None,
    config: ComputeConfig = None,
) -> Iterator[Tuple[Fraction, str, LatticeVector]]:
    """
    在覆盖图上惰性展开 Dijkstra，按距离不减的顺序产出 (距离, 顶点, 层)

    Args:
        sources: 起点状态及初始距离
        bound: 只展开距离严格小于 bound 的状态
        config: 节点预算来自 config.node_budget
    """
    config = config or DEFAULT_COMPUTE_CONFIG
    heap = []
    best: Dict[CoverState, Fraction] = {}
    for (vertex, sheet), dist in sources.items():
        if bound is not None and dist >= bound:
            continue
        best[(vertex, sheet)] = dist
        heapq.heappush(heap, (dist, vertex, sheet))

    settled = set()
    adjacency = g.adjacency
    while heap:
        dist, vertex, sheet = heapq.heappop(heap)
        state = (vertex, sheet)
        if state in settled:
            continue
        settled.add(state)
        if len(settled) > config.node_budget:
            raise BudgetExceeded("cover_nodes", config.node_budget)
        yield dist, vertex, sheet

        for neighbor, length, voltage, _ in adjacency[vertex]:
            nxt = (neighbor, vec_add(sheet, voltage))
            if nxt in settled:
                continue
            candidate = dist + length
            if bound is not None and candidate >= bound:
                continue
            previous = best.get(nxt)
            if previous is None or candidate < previous:
                best[nxt] = candidate
                heapq.heappush(heap, (candidate, nxt[0], nxt[1]))


@lru_cache(maxsize=128)
def _unit_orbit_distances(g: QuotientGraph, config: ComputeConfig) -> Tuple[Fraction, ...]:
    """一次 Dijkstra 求出所有 d(x₀, eᵢ.x₀)"""
    units = {tuple(int(i == j) for j in range(g.rank)): i for i in range(g.rank)}
    found: Dict[int, Fraction] = {}
    source = {(g.base_vertex, g.zero()): Fraction(0)}
    for dist, vertex, sheet in iter_cover_dijkstra(g, source, config=config):
        if vertex == g.base_vertex and sheet in units and units[sheet] not in found:
            found[units[sheet]] = dist
            if len(found) == g.rank:
                return tuple(found[i] for i in range(g.rank))
    raise ModelError("覆盖图中有单位向量不可达（电压格指数 > 1?）")


def orbit_distance_cutoff(g: QuotientGraph, gamma: Sequence[int], config: ComputeConfig = None) -> Fraction:
    """d(x₀, γ.x₀) 的可证上界 Σ|γᵢ|·d(x₀, eᵢ.x₀)"""
    gamma = as_lattice_vector(g, gamma)
    units = _unit_orbit_distances(g, config or DEFAULT_COMPUTE_CONFIG)
    return sum((abs(c) * u for c, u in zip(gamma, units)), Fraction(0))


def orbit_distance(g: QuotientGraph, gamma: Sequence[int], config: ComputeConfig = None) -> Fraction:
    """覆盖图中 (base, 0) 到 (base, γ) 的精确最短路长度"""
    gamma = as_lattice_vector(g, gamma)
    if not any(gamma):
        return Fraction(0)
    cutoff = orbit_distance_cutoff(g, gamma, config)
    source = {(g.base_vertex, g.zero()): Fraction(0)}
    # 只展开距离 ≤ cutoff 的状态
    bound = cutoff + g.min_edge_length
    try:
        for dist, vertex, sheet in iter_cover_dijkstra(g, source, bound=bound, config=config):
            if vertex == g.base_vertex and sheet == gamma:
                return dist
    except BudgetExceeded:
        logger.warning(f"d(0, {gamma}) 在上界 {exact.fraction_str(cutoff)} 内耗尽节点预算")
        raise
    raise ModelError(f"{gamma} 在上界 {exact.fraction_str(cutoff)} 内不可达")


def orbit_ball(g: QuotientGraph, radius: Fraction, config: ComputeConfig = None) -> Dict[LatticeVector, Fraction]:
    """{γ : d(x₀, γ.x₀) < R} 及精确距离，按格向量排序"""
    radius = Fraction(radius)
    if radius <= 0:
        raise ModelError(f"半径必须为正: {radius}")
    source = {(g.base_vertex, g.zero()): Fraction(0)}
    ball = {}
    for dist, vertex, sheet in iter_cover_dijkstra(g, source, bound=radius, config=config):
        if vertex == g.base_vertex:
            ball[sheet] = dist
    return dict(sorted(ball.items()))


def _point_sources(g: QuotientGraph, point: CoverPoint) -> Dict[CoverState, Fraction]:
    if point.edge is None:
        return {(point.vertex, point.sheet): Fraction(0)}
    edge = g.edges[point.edge]
    tail_state = (edge.tail, point.sheet)
    head_state = (edge.head, vec_add(point.sheet, edge.voltage))
    sources = {tail_state: point.t * edge.length}
    back = (1 - point.t) * edge.length
    if head_state not in sources or back < sources[head_state]:
        sources[head_state] = back
    return sources


def cover_distance(g: QuotientGraph, source: CoverPoint, target: CoverPoint,
                   config: ComputeConfig = None) -> Fraction:
    """覆盖图中任意两点（顶点或边内点）的精确距离"""
    if source == target:
        return Fraction(0)
    targets = _point_sources(g, target)
    best: Optional[Fraction] = None
    if source.edge is not None and source.edge == target.edge and source.sheet == target.sheet:
        best = abs(source.t - target.t) * g.edges[source.edge].length

    remaining = dict(targets)
    for dist, vertex, sheet in iter_cover_dijkstra(g, _point_sources(g, source), config=config):
        if best is not None and dist >= best:
            break
        offset = remaining.pop((vertex, sheet), None)
        if offset is not None:
            total = dist + offset
            if best is None or total < best:
                best = total
        if not remaining:
            break
    if best is None:
        raise ModelError("目标点不可达")
    return best


# ==================== 商图直径 ====================

# 直线 α·x + β·y = γ
_Line = Tuple[Fraction, Fraction, Fraction]


def _intersect(first: _Line, second: _Line) -> Optional[Tuple[Fraction, Fraction]]:
    a1, b1, c1 = first
    a2, b2, c2 = second
    det = a1 * b2 - a2 * b1
    if det == 0:
        return None
    return (c1 * b2 - c2 * b1) / det, (a1 * c2 - a2 * c1) / det


def _max_min_affine(pieces: List[Tuple[Fraction, Fraction, Fraction]],
                    direct: Optional[Fraction]) -> Fraction:
    """
    单位正方形上 h(s,t) = min(各仿射函数 c0 + cs·s + ct·t [, direct·|s−t|]) 的最大值

    h 在所有断线和边界线构成的剖分上分片线性，最大值在剖分顶点处取到
    """
    one, zero = Fraction(1), Fraction(0)
    lines: List[_Line] = [(one, zero, zero), (one, zero, one), (zero, one, zero), (zero, one, one)]
    functions = list(pieces)
    if direct is not None:
        functions.append((zero, direct, -direct))
        functions.append((zero, -direct, direct))
        lines.append((one, -one, zero))
    for (c0, cs, ct), (d0, ds, dt) in itertools.combinations(functions, 2):
        if cs != ds or ct != dt:
            lines.append((cs - ds, ct - dt, d0 - c0))

    def h(s: Fraction, t: Fraction) -> Fraction:
        value = min(c0 + cs * s + ct * t for c0, cs, ct in pieces)
        if direct is not None:
            value = min(value, abs(s - t) * direct)
        return value

    best = Fraction(0)
    for first, second in itertools.combinations(set(lines), 2):
        point = _intersect(first, second)
        if point is None:
            continue
        s, t = point
        if 0 <= s <= 1 and 0 <= t <= 1:
            best = max(best, h(s, t))
    return best


def quotient_distances(g: QuotientGraph) -> Dict[str, Dict[str, Fraction]]:
    """商图顶点间的精确距离（平行边取最短）"""
    return dict(nx.all_pairs_dijkstra_path_length(g.to_networkx(), weight="length"))


def quotient_diameter(g: QuotientGraph) -> Fraction:
    """商度量图的精确直径（包含边内点）"""
    dist = quotient_distances(g)
    best = Fraction(0)
    for i, e in enumerate(g.edges):
        for j in range(i, len(g.edges)):
            f = g.edges[j]
            le, lf = e.length, f.length
            a, b, c, d = e.tail, e.head, f.tail, f.head
            pieces = [
                (dist[a][c], le, lf),
                (dist[a][d] + lf, le, -lf),
                (le + dist[b][c], -le, lf),
                (le + dist[b][d] + lf, -le, -lf),
            ]
            best = max(best, _max_min_affine(pieces, le if i == j else None))
    return best


# ==================== 显式轨道度量（秩 1） ====================

# norm_fn(|m|, 精度位数) -> 区间包络；必须接受有理自变量
NormFunction = Callable[[Fraction, int], RationalInterval]


@dataclass(frozen=True)
class ExplicitOrbitMetric:
    """ℤ 上由显式函数给出的不变度量 d(a, b) = norm_fn(|a−b|)"""
    name: str
    norm_fn: NormFunction
    length_space: bool = False
    rank: int = 1

    def __post_init__(self):
        # 在小整数上检查 norm(0) = 0、正定性与三角不等式；对称性由 |a−b| 保证
        bits = 32
        zero = self.norm_fn(Fraction(0), bits)
        if not (zero.is_point and zero.lo == 0):
            raise ModelError(f"显式度量 {self.name}: norm(0) ≠ 0")
        values = {m: self.norm_fn(Fraction(m), bits) for m in range(1, 7)}
        for m, value in values.items():
            if value.hi <= 0:
                raise ModelError(f"显式度量 {self.name}: norm({m}) ≤ 0")
        for a, b in itertools.combinations_with_replacement(range(1, 4), 2):
            if values[a + b].lo > values[a].hi + values[b].hi:
                raise ModelError(f"显式度量 {self.name}: 三角不等式在 {a}+{b} 处不成立")

    def evaluate(self, m, bits: int) -> RationalInterval:
        return self.norm_fn(abs(Fraction(m)), bits)


def _require_rank_one(metric: ExplicitOrbitMetric):
    if metric.rank != 1:
        raise ModelError("显式度量只支持秩 1")


def explicit_stable_systole(metric: ExplicitOrbitMetric, config: ComputeConfig = None) -> Fraction:
    """
    稳定斜率 lim norm_fn(k)/k

    取 K = 2^(2·bits)，由次可加性极限不超过 norm_fn(K)/K；
    返回 [上界 − 2^(−bits/2), 上界] 内分母最小的有理数
    """
    config = config or DEFAULT_COMPUTE_CONFIG
    _require_rank_one(metric)
    bits = config.precision_bits
    big = Fraction(1 << (2 * bits))
    upper = metric.evaluate(big, bits).hi / big
    slack = Fraction(1, 1 << (bits // 2))
    return exact.simplest_between(max(Fraction(0), upper - slack), upper)


def explicit_codiameter(metric: ExplicitOrbitMetric, config: ComputeConfig = None) -> RationalInterval:
    """半步长处的度量值 norm_fn(1/2)"""
    config = config or DEFAULT_COMPUTE_CONFIG
    _require_rank_one(metric)
    return metric.evaluate(Fraction(1, 2), config.precision_bits)


def explicit_metric_deviation(metric: ExplicitOrbitMetric, bound: int,
                              config: ComputeConfig = None) -> Tuple[RationalInterval, int]:
    """
    max_{|m| ≤ M} |norm_fn(m) − 稳定范数(m)|

    Returns:
        (偏差包络, 取到最大值的 m ≥ 0)
    """
    config = config or DEFAULT_COMPUTE_CONFIG
    _require_rank_one(metric)
    slope = explicit_stable_systole(metric, config)
    bits = config.precision_bits
    best, argmax = RationalInterval.point(0), 0
    for m in range(0, int(bound) + 1):
        deviation = abs(metric.evaluate(m, bits) - slope * m)
        if deviation.hi > best.hi:
            best, argmax = deviation, m
    return best, argmax


def inner_property_check(metric: ExplicitOrbitMetric, epsilon: Fraction, bound: int,
                         config: ComputeConfig = None) -> bool:
    """
    用步长 ℓ(ε) = ⌈4/ε²⌉ + 1 的链 0, ℓ, 2ℓ, …, x 检查近似内度量性质

    对每个 |x| ≤ M 判定 N·|||ℓ||| + |||r||| ≤ (1+ε)·|||x|||，x = Nℓ + r
    """
    config = config or DEFAULT_COMPUTE_CONFIG
    _require_rank_one(metric)
    epsilon = Fraction(epsilon)
    if epsilon <= 0:
        raise ModelError(f"ε 必须为正: {epsilon}")
    step = math.ceil(4 / (epsilon * epsilon)) + 1

    for x in range(1, int(bound) + 1):
        count, rest = divmod(x, step)
        if count == 0:
            continue

        def chain(bits, count=count, rest=rest):
            return count * metric.evaluate(step, bits) + metric.evaluate(rest, bits)

        def target(bits, x=x):
            return (1 + epsilon) * metric.evaluate(x, bits)

        verdict, _ = decide_le(chain, target, config.precision_bits, config.max_precision_bits)
        if verdict != Verdict.PASS:
            logger.debug(f"链条件在 x={x} 处不成立: {verdict.value}")
            return False
    return True
