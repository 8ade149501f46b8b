"""
PeriodicMetrics - 稳定范数几何
稳定单位球 = 所有简单环 (电压/长度) 的凸包，全部在 ℚ 上精确计算
"""

import itertools
import logging
import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Dict, FrozenSet, List, Optional, Sequence, Tuple

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from . import exact
from .config import ComputeConfig, DEFAULT_COMPUTE_CONFIG
from .errors import BudgetExceeded, ModelError
from .exact import LatticeVector, Point, dot
from .periodic_model import QuotientGraph, orbit_distance, vec_add, vec_neg, vec_scale

logger = logging.getLogger(__name__)

Matrix = Tuple[Tuple[Fraction, ...], ...]


# ==================== 简单环 ====================

def simple_cycles(g: QuotientGraph, config: ComputeConfig = None) -> List[Tuple[LatticeVector, Fraction]]:
    """
    枚举底层多重图的所有简单环，每个环按两个方向各报告一次

    Returns:
        [(电压, 长度)]，顺序确定

    Raises:
        BudgetExceeded: 环数超过 config.cycle_cap
    """
    config = config or DEFAULT_COMPUTE_CONFIG
    order = {v: i for i, v in enumerate(g.vertices)}
    cycles: List[Tuple[LatticeVector, Fraction]] = []

    def emit(voltage: LatticeVector, length: Fraction):
        cycles.append((voltage, length))
        cycles.append((vec_neg(voltage), length))
        if len(cycles) > config.cycle_cap:
            raise BudgetExceeded("simple_cycles", config.cycle_cap)

    for edge in g.edges:
        if edge.tail == edge.head:
            emit(edge.voltage, edge.length)

    def extend(start: str, vertex: str, voltage: LatticeVector, length: Fraction,
               first_edge: int, visited: set):
        for neighbor, step, volt, index in g.adjacency[vertex]:
            edge = g.edges[index]
            if edge.tail == edge.head:
                continue
            if neighbor == start:
                # 两个方向只保留首边序号较小的那个
                if first_edge < index:
                    emit(vec_add(voltage, volt), length + step)
            elif order[neighbor] > order[start] and neighbor not in visited:
                visited.add(neighbor)
                extend(start, neighbor, vec_add(voltage, volt), length + step, first_edge, visited)
                visited.discard(neighbor)

    for start in g.vertices:
        for neighbor, step, volt, index in g.adjacency[start]:
            edge = g.edges[index]
            if edge.tail == edge.head or order[neighbor] <= order[start]:
                continue
            extend(start, neighbor, volt, step, index, {neighbor})

    logger.debug(f"简单环枚举完成: {len(cycles)} 个（含两个方向）")
    return cycles


# ==================== 精确凸包 ====================

def _cross(u: Point, v: Point, p: Point) -> Fraction:
    return (p[0] - u[0]) * (v[1] - u[1]) - (p[1] - u[1]) * (v[0] - u[0])


def _split(u: Point, v: Point, points: List[Point]) -> List[Point]:
    return [p for p in points if _cross(u, v, p) < 0]


def _extend(u: Point, v: Point, points: List[Point]) -> List[Point]:
    if not points:
        return []
    w = min(points, key=lambda p: (_cross(u, v, p), p))
    p1, p2 = _split(w, v, points), _split(u, w, points)
    return _extend(w, v, p1) + [w] + _extend(u, w, p2)


def _planar_hull(points: List[Point]) -> List[Point]:
    """平面快速凸包（精确叉积），返回按环绕顺序排列的顶点"""
    u, v = min(points), max(points)
    left, right = _split(u, v, points), _split(v, u, points)
    return [v] + _extend(u, v, left) + [u] + _extend(v, u, right)


def _facet_through(points: Sequence[Point]) -> Optional[Point]:
    normal = exact.solve([list(p) for p in points], [Fraction(1)] * len(points))
    return tuple(normal) if normal is not None else None


def _is_supporting(normal: Point, points: Sequence[Point], dim: int) -> bool:
    """a·x ≤ 1 对所有点成立，且紧点张成 n−1 维仿射面"""
    tight = []
    for p in points:
        value = dot(normal, p)
        if value > 1:
            return False
        if value == 1:
            tight.append(p)
    return exact.affine_dimension(tight) == dim - 1


def _vertex_of(facets: Sequence[Point], subset: Sequence[int], dim: int) -> Optional[Point]:
    solution = exact.solve([facets[i] for i in subset], [Fraction(1)] * dim)
    if solution is None:
        return None
    point = tuple(solution)
    if all(dot(a, point) <= 1 for a in facets):
        return point
    return None


def _vertices_exact(facets: Sequence[Point], dim: int) -> List[Point]:
    vertices = set()
    for subset in itertools.combinations(range(len(facets)), dim):
        point = _vertex_of(facets, subset, dim)
        if point is not None:
            vertices.add(point)
    return sorted(vertices)


def _vertices_from_facets(facets: Sequence[Point], dim: int) -> Optional[List[Point]]:
    """H 表示 → 顶点；无界（法向量秩不足）时返回 None"""
    if exact.rank(list(facets)) < dim:
        return None
    normals = np.array([[float(x) for x in a] for a in facets])
    vertices = set()
    for subset in itertools.combinations(range(len(facets)), dim):
        block = normals[list(subset)]
        if abs(np.linalg.det(block)) >= 1e-12:
            # 浮点只做预筛
            approx = np.linalg.solve(block, np.ones(dim))
            if np.max(normals @ approx) > 1 + 1e-7 * max(1.0, float(np.max(np.abs(approx)))):
                continue
        point = _vertex_of(facets, subset, dim)
        if point is not None:
            vertices.add(point)
    # 有界多胞形至少有 dim+1 个顶点
    if len(vertices) < dim + 1:
        logger.warning("浮点预筛后顶点不足，改用精确穷举")
        return _vertices_exact(facets, dim)
    return sorted(vertices)


def _facets_bruteforce(points: List[Point], dim: int) -> List[Point]:
    facets = set()
    for subset in itertools.combinations(points, dim):
        normal = _facet_through(subset)
        if normal is not None and normal not in facets and _is_supporting(normal, points, dim):
            facets.add(normal)
    return sorted(facets)


def _facets_qhull(points: List[Point], dim: int) -> List[Point]:
    """Qhull 给出候选面，每个候选在 ℚ 上重新验证；不完整时退回穷举"""
    coords = np.array([[float(x) for x in p] for p in points])
    try:
        hull = ConvexHull(coords)
    except QhullError as e:
        logger.warning(f"Qhull 失败，改用穷举: {e}")
        return _facets_bruteforce(points, dim)

    facets = set()
    for simplex in hull.simplices:
        normal = _facet_through([points[i] for i in simplex])
        if normal is None or normal in facets:
            continue
        if _is_supporting(normal, points, dim):
            facets.add(normal)
            facets.add(tuple(-x for x in normal))

    facets = sorted(facets)
    vertices = _vertices_from_facets(facets, dim)
    known = set(points)
    if vertices is not None and all(v in known for v in vertices):
        return facets

    logger.warning("Qhull 候选面不完整，改用穷举")
    near = set(hull.vertices.tolist())
    for equation in hull.equations:
        distances = coords @ equation[:-1] + equation[-1]
        near.update(np.nonzero(np.abs(distances) < 1e-7)[0].tolist())
    candidates = sorted(points[i] for i in near)
    return _facets_bruteforce(candidates, dim)


def _symmetrize(points, dim: int) -> List[Point]:
    cleaned = set()
    for p in points:
        p = tuple(Fraction(x) for x in p)
        if len(p) != dim:
            raise ModelError(f"点的维数 {len(p)} 与秩 {dim} 不符")
        if any(p):
            cleaned.add(p)
            cleaned.add(tuple(-x for x in p))
    return sorted(cleaned)


@dataclass(frozen=True)
class StableBall:
    """
    中心对称的有理多胞形

    - vertices: V 表示（字典序）
    - facets: H 表示，每个法向量 a 对应不等式 a·x ≤ 1
    """
    rank: int
    vertices: Tuple[Point, ...]
    facets: Tuple[Point, ...]

    @classmethod
    def from_points(cls, points, rank: int) -> "StableBall":
        """点集（自动补全 −p）的凸包"""
        pts = _symmetrize(points, rank)
        if not pts or exact.rank(pts) < rank:
            raise ModelError("点集不是满维的，无法构成单位球")

        if rank == 1:
            m = max(p[0] for p in pts)
            return cls(1, ((-m,), (m,)), ((-1 / m,), (1 / m,)))
        if rank == 2:
            ring = _planar_hull(pts)
            facets = set()
            for p, q in zip(ring, ring[1:] + ring[:1]):
                normal = _facet_through([p, q])
                if normal is not None:
                    facets.add(normal)
            facets = sorted(facets)
        else:
            facets = _facets_qhull(pts, rank)
        return cls._from_hrep(facets, rank, pts)

    @classmethod
    def from_facets(cls, facets, rank: int) -> "StableBall":
        """H 表示 → 单位球（冗余不等式会被去掉）"""
        facets = sorted({tuple(Fraction(x) for x in a) for a in facets})
        vertices = _vertices_from_facets(facets, rank)
        if not vertices:
            raise ModelError("不等式组无界或为空")
        return cls.from_points(vertices, rank)

    @classmethod
    def _from_hrep(cls, facets: List[Point], rank: int, points: List[Point]) -> "StableBall":
        vertices = []
        for p in points:
            normals = [a for a in facets if dot(a, p) == 1]
            if len(normals) >= rank and exact.rank(normals) == rank:
                vertices.append(p)
        return cls(rank, tuple(sorted(vertices)), tuple(sorted(facets)))

    def gauge(self, x: Sequence) -> Fraction:
        return max([Fraction(0)] + [dot(a, x) for a in self.facets])

    def contains(self, x: Sequence) -> bool:
        return self.gauge(x) <= 1

    def scaled(self, factor: Fraction) -> "StableBall":
        factor = Fraction(factor)
        return StableBall(
            self.rank,
            tuple(tuple(factor * c for c in v) for v in self.vertices),
            tuple(tuple(c / factor for c in a) for a in self.facets),
        )

    def box(self) -> Tuple[Fraction, ...]:
        """每个坐标方向上的最大绝对值（外接盒半宽）"""
        return tuple(max(abs(v[i]) for v in self.vertices) for i in range(self.rank))

    def to_json(self) -> dict:
        return {
            "rank": self.rank,
            "vertices": [[exact.fraction_str(x) for x in v] for v in self.vertices],
            "facets": [[exact.fraction_str(x) for x in a] for a in self.facets],
        }


def stable_unit_ball(g: QuotientGraph, config: ComputeConfig = None) -> StableBall:
    """conv{电压(c)/长度(c)}，c 取遍简单环"""
    points = [tuple(Fraction(x) / length for x in voltage)
              for voltage, length in simple_cycles(g, config) if any(voltage)]
    return StableBall.from_points(points, g.rank)


def gauge(ball: StableBall, x: Sequence) -> Fraction:
    """Minkowski 规范 min{t ≥ 0 : x ∈ tB}"""
    return ball.gauge(x)


def stable_norm_empirical(g: QuotientGraph, gamma: Sequence[int], k: int,
                          config: ComputeConfig = None) -> Fraction:
    """d(x₀, kγ.x₀) / k"""
    if k < 1:
        raise ModelError(f"k 必须为正整数: {k}")
    return orbit_distance(g, vec_scale(k, gamma), config) / k


# ==================== 体积 ====================

def _triangulate(face: FrozenSet[int], dim: int, facet_sets: List[FrozenSet[int]],
                 vertices: Tuple[Point, ...]) -> List[Tuple[int, ...]]:
    """以最小顶点为锥顶递归剖分一个 dim 维面"""
    if dim == 0:
        return [tuple(face)]
    if dim == 1:
        return [tuple(sorted(face))]
    apex = min(face)
    subfaces = set()
    for facet in facet_sets:
        sub = face & facet
        if sub == face or apex in sub:
            continue
        if exact.affine_dimension([vertices[i] for i in sorted(sub)]) == dim - 1:
            subfaces.add(frozenset(sub))
    simplices = []
    for sub in sorted(subfaces, key=sorted):
        for simplex in _triangulate(sub, dim - 1, facet_sets, vertices):
            simplices.append((apex,) + simplex)
    return simplices


def ball_volume(ball: StableBall) -> Fraction:
    """从原点出发的扇形剖分求精确体积"""
    if ball.rank == 1:
        return ball.vertices[-1][0] - ball.vertices[0][0]
    vertices = ball.vertices
    facet_sets = [frozenset(i for i, v in enumerate(vertices) if dot(a, v) == 1) for a in ball.facets]
    total = Fraction(0)
    for facet in facet_sets:
        for simplex in _triangulate(facet, ball.rank - 1, facet_sets, vertices):
            total += abs(exact.det([list(vertices[i]) for i in simplex]))
    return total / math.factorial(ball.rank)


def monte_carlo_volume(ball: StableBall, samples: int = 100_000, seed: int = 0) -> Tuple[float, float]:
    """
    蒙特卡洛体积估计（仅作交叉检验）

    Returns:
        (估计值, 标准误差)
    """
    rng = np.random.default_rng(seed)
    half = np.array([float(x) for x in ball.box()])
    normals = np.array([[float(x) for x in a] for a in ball.facets])
    draws = rng.uniform(-half, half, size=(samples, ball.rank))
    inside = np.all(draws @ normals.T <= 1.0, axis=1)
    box_volume = float(np.prod(2 * half))
    fraction = inside.mean()
    return box_volume * fraction, box_volume * math.sqrt(fraction * (1 - fraction) / samples)


# ==================== 格上的范数 ====================

def _as_matrix(basis) -> Matrix:
    return tuple(tuple(Fraction(x) for x in row) for row in basis)


def identity_basis(n: int) -> Matrix:
    return tuple(tuple(Fraction(int(i == j)) for j in range(n)) for i in range(n))


def lattice_points(ball: StableBall, basis, radius: Fraction,
                   strict: bool = False) -> List[Tuple[LatticeVector, Point]]:
    """
    枚举 gauge(Lc) ≤ radius（strict 时 <）的非零格向量

    Returns:
        [(系数 c, 点 Lc)]，按系数的乘积顺序
    """
    basis = _as_matrix(basis)
    inverse = exact.inverse(basis)
    if inverse is None:
        raise ModelError("格基矩阵奇异")
    radius = Fraction(radius)
    half = ball.box()
    bounds = [math.floor(radius * sum(abs(inverse[j][i]) * half[i] for i in range(ball.rank)))
              for j in range(ball.rank)]
    found = []
    for coeffs in itertools.product(*(range(-b, b + 1) for b in bounds)):
        if not any(coeffs):
            continue
        point = exact.mat_vec(basis, coeffs)
        value = ball.gauge(point)
        if value < radius or (not strict and value == radius):
            found.append((tuple(coeffs), point))
    return found


def _columns(basis: Matrix) -> List[Point]:
    return [tuple(row[j] for row in basis) for j in range(len(basis))]


def stable_systole(ball: StableBall, basis=None) -> Tuple[Fraction, LatticeVector]:
    """非零格向量上的最小规范值及取到它的格向量（首个非零坐标为正）"""
    basis = _as_matrix(basis) if basis is not None else identity_basis(ball.rank)
    upper = min(ball.gauge(column) for column in _columns(basis))
    best: Optional[Tuple[Fraction, LatticeVector]] = None
    for coeffs, point in lattice_points(ball, basis, upper):
        if next(x for x in coeffs if x) < 0:
            continue
        value = ball.gauge(point)
        if best is None or value < best[0]:
            best = (value, coeffs)
    return best


def covolume(basis) -> Fraction:
    return abs(exact.det([list(row) for row in _as_matrix(basis)]))


def parallelohedron_check(ball: StableBall, basis=None) -> bool:
    """
    格平移是否铺满 ℝⁿ

    体积等于格的余体积，且 gauge(γ) < 2 的非零格向量不存在。
    对中心对称体，b° 与 γ + b° 相交当且仅当 gauge(γ) < 2
    """
    basis = _as_matrix(basis) if basis is not None else identity_basis(ball.rank)
    if ball_volume(ball) != covolume(basis):
        return False
    return not lattice_points(ball, basis, Fraction(2), strict=True)


class Membership(Enum):
    INTERIOR = "interior"
    BOUNDARY = "boundary"
    EXTERIOR = "exterior"


def dirichlet_membership(ball: StableBall, basis, p: Sequence) -> Membership:
    """
    p 相对稳定范数 Dirichlet 域的位置

    比较对象为 gauge(γ) ≤ 2·gauge(p) + 2 的格向量（球在自身规范下的外接半径为 1）
    """
    basis = _as_matrix(basis) if basis is not None else identity_basis(ball.rank)
    p = tuple(Fraction(x) for x in p)
    own = ball.gauge(p)
    tie = False
    for _, point in lattice_points(ball, basis, 2 * own + 2):
        other = ball.gauge(tuple(a - b for a, b in zip(p, point)))
        if other < own:
            return Membership.EXTERIOR
        if other == own:
            tie = True
    return Membership.BOUNDARY if tie else Membership.INTERIOR


class BallKind(Enum):
    POLYTOPE = "polytope"
    WEIGHTED_L1 = "weighted_l1"
    LINF = "linf"


@dataclass(frozen=True)
class NormedLatticeSpace:
    """赋范空间 (ℝⁿ, ‖·‖) 中的格 Lℤⁿ（basis 的列生成格）"""
    rank: int
    ball: StableBall
    basis: Matrix
    kind: BallKind = BallKind.POLYTOPE
    weights: Optional[Tuple[Fraction, ...]] = None
    scale: Optional[Fraction] = None
    supplied_codiameter: Optional[Fraction] = None

    def __post_init__(self):
        object.__setattr__(self, "basis", _as_matrix(self.basis))
        if len(self.basis) != self.rank or covolume(self.basis) == 0:
            raise ModelError("格基矩阵必须是非奇异的 n×n 矩阵")

    @property
    def covolume(self) -> Fraction:
        return covolume(self.basis)

    def is_diagonal(self) -> bool:
        return all(self.basis[i][j] == 0 for i in range(self.rank) for j in range(self.rank) if i != j)

    def codiameter(self) -> Optional[Fraction]:
        """商 ℝⁿ/L 的直径（覆盖半径）；对角格有闭式，其余需外部提供"""
        if self.supplied_codiameter is not None:
            return self.supplied_codiameter
        if not self.is_diagonal():
            return None
        steps = [abs(self.basis[i][i]) for i in range(self.rank)]
        if self.kind == BallKind.LINF:
            return max(steps) / (2 * self.scale)
        if self.kind == BallKind.WEIGHTED_L1:
            return sum(w * d for w, d in zip(self.weights, steps)) / 2
        return None

    def to_json(self) -> dict:
        return {
            "kind": self.kind.value,
            "ball": self.ball.to_json(),
            "basis": [[exact.fraction_str(x) for x in row] for row in self.basis],
        }


def linf_space(n: int, scale: Fraction = Fraction(1), basis=None) -> NormedLatticeSpace:
    """单位球为 [−s, s]ⁿ 的 ℓ^∞ 空间"""
    scale = Fraction(scale)
    if n < 1 or scale <= 0:
        raise ModelError("ℓ^∞ 空间参数非法")
    vertices = [tuple(scale * s for s in signs) for signs in itertools.product((-1, 1), repeat=n)]
    ball = StableBall.from_points(vertices, n)
    return NormedLatticeSpace(n, ball, basis if basis is not None else identity_basis(n),
                              BallKind.LINF, scale=scale)


def weighted_l1_space(weights: Sequence[Fraction], basis=None) -> NormedLatticeSpace:
    """范数 Σ wᵢ|xᵢ|，单位球 conv{±eᵢ/wᵢ}"""
    weights = tuple(Fraction(w) for w in weights)
    n = len(weights)
    if n < 1 or any(w <= 0 for w in weights):
        raise ModelError("权重必须为正")
    vertices = [tuple(1 / weights[i] if j == i else Fraction(0) for j in range(n)) for i in range(n)]
    ball = StableBall.from_points(vertices, n)
    return NormedLatticeSpace(n, ball, basis if basis is not None else identity_basis(n),
                              BallKind.WEIGHTED_L1, weights=weights)


def polytope_space(vertices, basis=None, codiameter: Optional[Fraction] = None) -> NormedLatticeSpace:
    vertices = [tuple(Fraction(x) for x in v) for v in vertices]
    n = len(vertices[0])
    ball = StableBall.from_points(vertices, n)
    return NormedLatticeSpace(n, ball, basis if basis is not None else identity_basis(n),
                              BallKind.POLYTOPE,
                              supplied_codiameter=Fraction(codiameter) if codiameter is not None else None)
