"""
PeriodicMetrics - 路径分割
分段线性路径上的区间选择：至多 n 个不相交开区间，总长 ≤ ℓ/2，
增量之和恰为整条路径位移的一半
"""

import bisect
import itertools
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from . import exact
from .config import ComputeConfig, DEFAULT_COMPUTE_CONFIG
from .errors import BudgetExceeded, ModelError
from .exact import Point

logger = logging.getLogger(__name__)


def _sub(a: Point, b: Point) -> Point:
    return tuple(x - y for x, y in zip(a, b))


def _add(a: Point, b: Point) -> Point:
    return tuple(x + y for x, y in zip(a, b))


def l1_norm(v: Point) -> Fraction:
    return sum((abs(x) for x in v), Fraction(0))


def linf_norm(v: Point) -> Fraction:
    return max((abs(x) for x in v), default=Fraction(0))


@dataclass(frozen=True)
class Polyline:
    """
    按弧长参数化的分段线性路径 c: [0, ℓ] → ℚⁿ

    ‖c(tᵢ₊₁) − c(tᵢ)‖ ≤ tᵢ₊₁ − tᵢ；norm 缺省时用欧氏范数（平方后精确比较），
    也可传入返回有理数的范数，例如 l1_norm、linf_norm
    """
    params: Tuple[Fraction, ...]
    points: Tuple[Point, ...]
    norm: Optional[Callable[[Point], Fraction]] = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        params = tuple(Fraction(t) for t in self.params)
        points = tuple(tuple(Fraction(x) for x in p) for p in self.points)
        object.__setattr__(self, "params", params)
        object.__setattr__(self, "points", points)
        if len(params) < 2 or len(params) != len(points):
            raise ModelError("折线至少需要两个断点，且参数与点数一致")
        if params[0] != 0:
            raise ModelError("参数必须从 0 开始")
        dim = len(points[0])
        for i in range(len(params) - 1):
            step = params[i + 1] - params[i]
            if step <= 0:
                raise ModelError("参数必须严格递增")
            if len(points[i + 1]) != dim:
                raise ModelError("点的维数不一致")
            delta = _sub(points[i + 1], points[i])
            if self.norm is None:
                too_long = exact.dot(delta, delta) > step * step
            else:
                too_long = Fraction(self.norm(delta)) > step
            if too_long:
                raise ModelError(f"第 {i} 段不是 1-Lipschitz")

    @property
    def length(self) -> Fraction:
        return self.params[-1]

    @property
    def dim(self) -> int:
        return len(self.points[0])

    @property
    def segments(self) -> int:
        return len(self.params) - 1

    def at(self, t: Fraction) -> Point:
        """c(t)，精确线性插值"""
        t = Fraction(t)
        if not 0 <= t <= self.length:
            raise ModelError(f"参数 {t} 超出 [0, {self.length}]")
        i = min(bisect.bisect_right(self.params, t) - 1, self.segments - 1)
        lam = (t - self.params[i]) / (self.params[i + 1] - self.params[i])
        p, q = self.points[i], self.points[i + 1]
        return tuple(a + lam * (b - a) for a, b in zip(p, q))

    def displacement(self) -> Point:
        return _sub(self.points[-1], self.points[0])


@dataclass(frozen=True)
class IntervalSelection:
    """不相交开区间 (aᵢ, bᵢ)，按左端点排序"""
    intervals: Tuple[Tuple[Fraction, Fraction], ...]

    def __post_init__(self):
        intervals = tuple(sorted((Fraction(a), Fraction(b)) for a, b in self.intervals))
        for a, b in intervals:
            if a >= b:
                raise ModelError(f"区间 ({a}, {b}) 为空或颠倒")
        for (_, b1), (a2, _) in zip(intervals, intervals[1:]):
            if b1 > a2:
                raise ModelError("区间相交")
        object.__setattr__(self, "intervals", intervals)

    @property
    def measure(self) -> Fraction:
        return sum((b - a for a, b in self.intervals), Fraction(0))

    def to_json(self) -> list:
        return [[exact.fraction_str(a), exact.fraction_str(b)] for a, b in self.intervals]


def _increment_sum(path: Polyline, sel: IntervalSelection) -> Point:
    total = tuple(Fraction(0) for _ in range(path.dim))
    for a, b in sel.intervals:
        total = _add(total, _sub(path.at(b), path.at(a)))
    return total


def bp_verify(path: Polyline, sel: IntervalSelection, tol: Fraction = Fraction(0)) -> bool:
    """
    检查 Σ (c(bᵢ) − c(aᵢ)) = (c(ℓ) − c(0))/2, λ(A) ≤ ℓ/2, m ≤ n

    tol = 0 时精确比较，否则逐坐标允许 tol 的误差
    """
    tol = Fraction(tol)
    if len(sel.intervals) > path.dim:
        return False
    for a, b in sel.intervals:
        if a < 0 or b > path.length:
            raise ModelError(f"区间 ({a}, {b}) 超出 [0, {path.length}]")
    if sel.measure > path.length / 2:
        return False
    target = tuple(x / 2 for x in path.displacement())
    diff = _sub(_increment_sum(path, sel), target)
    if tol == 0:
        return not any(diff)
    return all(abs(x) <= tol for x in diff)


# ==================== 搜索 ====================

def _slide(path: Polyline, target: Point) -> Optional[IntervalSelection]:
    """
    单个长 ℓ/2 的窗口 (a, a + ℓ/2)

    φ(a) = c(a + ℓ/2) − c(a) 在断点之间是仿射的，φ(0) + φ(ℓ/2) = 2·目标，
    n = 1 时由介值定理必有解
    """
    half = path.length / 2
    knots = sorted({Fraction(0), half}
                   | {t for t in path.params if 0 < t < half}
                   | {t - half for t in path.params if 0 < t - half < half})

    def phi(a: Fraction) -> Point:
        return _sub(path.at(a + half), path.at(a))

    for u, w in zip(knots, knots[1:]):
        start, end = phi(u), phi(w)
        change = _sub(end, start)
        need = _sub(target, start)
        if not any(change):
            if not any(need):
                return IntervalSelection(((u, u + half),))
            continue
        pivot = next(i for i, x in enumerate(change) if x)
        lam = need[pivot] / change[pivot]
        if 0 <= lam <= 1 and all(need[i] == lam * change[i] for i in range(path.dim)):
            a = u + lam * (w - u)
            return IntervalSelection(((a, a + half),))
    return None


def _grid(path: Polyline, depth: int) -> List[Fraction]:
    """断点加上每段 2^depth 等分点"""
    points = set()
    for t0, t1 in zip(path.params, path.params[1:]):
        step = (t1 - t0) / (2 ** depth)
        points.update(t0 + k * step for k in range(2 ** depth))
    points.add(path.length)
    return sorted(points)


def _solve_columns(columns: List[Point], rhs: Point, dim: int) -> Optional[List[Fraction]]:
    """
    Σ τᵢ·columnsᵢ = rhs（n 个方程，m ≤ n 个未知数）

    取 m 行的非奇异子方阵精确求解，再检查其余各行
    """
    m = len(columns)
    matrix = np.array([[float(columns[i][r]) for i in range(m)] for r in range(dim)])
    approx, _, matrix_rank, _ = np.linalg.lstsq(matrix, np.array([float(x) for x in rhs]), rcond=None)
    # 浮点预筛：秩不足或明显越界的组合跳过
    if matrix_rank < m or np.any(approx < -1e-9) or np.any(approx > 1 + 1e-9):
        return None
    for rows in itertools.combinations(range(dim), m):
        tau = exact.solve([[columns[i][r] for i in range(m)] for r in rows], [rhs[r] for r in rows])
        if tau is None:
            continue
        if all(exact.dot([columns[i][r] for i in range(m)], tau) == rhs[r] for r in range(dim)):
            return tau
        return None
    return None


def _candidate_selections(path: Polyline, starts: Sequence[Fraction], target: Point,
                          counter: List[int], budget: int) -> Iterator[IntervalSelection]:
    """
    固定左端点 a₁ < … < a_m，为每个右端点指定所在的段，
    解线性方程 Σ τᵢ·Δc_{jᵢ} = 目标 + Σ c(aᵢ) − Σ c(t_{jᵢ})
    """
    base = _add(target, tuple(sum(col) for col in zip(*(path.at(a) for a in starts))))
    segment_of = [min(bisect.bisect_right(path.params, a) - 1, path.segments - 1) for a in starts]
    choices = [range(segment_of[i], path.segments) for i in range(len(starts))]
    deltas = [_sub(path.points[j + 1], path.points[j]) for j in range(path.segments)]

    for assignment in itertools.product(*choices):
        counter[0] += 1
        if counter[0] > budget:
            raise BudgetExceeded("bp_search", budget)
        columns = [deltas[j] for j in assignment]
        rhs = _sub(base, tuple(sum(col) for col in zip(*(path.points[j] for j in assignment))))
        tau = _solve_columns(columns, rhs, path.dim)
        if tau is None or any(not 0 <= x <= 1 for x in tau):
            continue
        ends = [path.params[j] + x * (path.params[j + 1] - path.params[j]) for j, x in zip(assignment, tau)]
        pairs = list(zip(starts, ends))
        if any(a >= b for a, b in pairs):
            continue
        if any(b1 > a2 for (_, b1), (a2, _) in zip(pairs, pairs[1:])):
            continue
        yield IntervalSelection(tuple(pairs))


def bp_search(path: Polyline, config: ComputeConfig = None) -> IntervalSelection:
    """
    构造满足 bp_verify（精确）的区间选择

    先试长 ℓ/2 的滑动窗口，再在逐级加密的二进网格上枚举 1..n 个左端点

    Raises:
        BudgetExceeded: 在预算或最大深度内没找到（不代表不存在）
    """
    config = config or DEFAULT_COMPUTE_CONFIG
    target = tuple(x / 2 for x in path.displacement())
    if not any(target):
        return IntervalSelection(())

    found = _slide(path, target)
    if found is not None and bp_verify(path, found):
        return found

    counter = [0]
    tried = set()
    for depth in range(config.bp_max_depth + 1):
        grid = [t for t in _grid(path, depth) if t < path.length]
        logger.debug(f"路径分割搜索: 深度 {depth}, 网格 {len(grid)} 点")
        for size in range(1, path.dim + 1):
            for starts in itertools.combinations(grid, size):
                if starts in tried:
                    continue
                tried.add(starts)
                for selection in _candidate_selections(path, starts, target, counter, config.bp_budget):
                    if bp_verify(path, selection):
                        return selection
    logger.warning("路径分割搜索在最大深度内未找到选择")
    raise BudgetExceeded("bp_search_depth", config.bp_max_depth)


def random_polyline(seed: int, dim: int = 2, segments: int = 4, max_step: int = 3) -> Polyline:
    """随机有理折线：整数步长，参数取累计 ℓ¹ 长度（保证欧氏 1-Lipschitz）"""
    rng = np.random.default_rng(seed)
    points = [tuple(Fraction(0) for _ in range(dim))]
    params = [Fraction(0)]
    while len(points) <= segments:
        step = tuple(int(x) for x in rng.integers(-max_step, max_step + 1, size=dim))
        if not any(step):
            continue
        points.append(tuple(p + s for p, s in zip(points[-1], step)))
        params.append(params[-1] + sum(abs(s) for s in step))
    return Polyline(tuple(params), tuple(points))
