"""
PeriodicMetrics - 实例库
带期望值的示例实例构造器，随机实例生成
"""

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Sequence, Tuple, Union

import numpy as np

from . import invariants
from .config import ComputeConfig, DEFAULT_COMPUTE_CONFIG
from .errors import ModelError
from .interval import RationalInterval, sqrt
from .periodic_model import (
    Edge,
    ExplicitOrbitMetric,
    QuotientGraph,
    explicit_metric_deviation,
    explicit_stable_systole,
    quotient_diameter,
    validate,
)
from .stable_geometry import (
    NormedLatticeSpace,
    ball_volume,
    linf_space,
    polytope_space,
    stable_systole,
    stable_unit_ball,
    weighted_l1_space,
)

logger = logging.getLogger(__name__)

Subject = Union[QuotientGraph, NormedLatticeSpace, ExplicitOrbitMetric]


@dataclass
class GalleryInstance:
    """带期望不变量的实例"""
    name: str
    subject: Subject
    expected: Dict[str, Fraction] = field(default_factory=dict)
    description: str = ""

    @property
    def kind(self) -> str:
        if isinstance(self.subject, QuotientGraph):
            return "graph"
        if isinstance(self.subject, NormedLatticeSpace):
            return "normed_lattice"
        return "explicit_metric"


def _unit(n: int, i: int) -> Tuple[int, ...]:
    return tuple(int(j == i) for j in range(n))


def build_rose(n: int) -> GalleryInstance:
    """ℤⁿ 的标准玫瑰图：单顶点，n 个长度 1 的环，电压 e₁…eₙ"""
    if n < 1:
        raise ModelError(f"n 必须 ≥ 1: {n}")
    edges = tuple(Edge("v0", "v0", Fraction(1), _unit(n, i)) for i in range(n))
    graph = QuotientGraph(n, ("v0",), edges, "v0")
    expected = {
        "sys": Fraction(1),
        "stsys": Fraction(1),
        "omega": Fraction(2 ** n, math.factorial(n)),
        "codiam": Fraction(1, 2) if n == 1 else Fraction(1),
    }
    return GalleryInstance(f"rose-{n}", graph, expected, "ℤⁿ 的标准字度量")


def build_cayley_Z(gens: Sequence[Tuple[int, Fraction]]) -> GalleryInstance:
    """
    ℤ 的 Cayley 图：每个生成元 (电压, 长度) 是一个环

    生成元为 {(1,1), (k,1)}（k ≥ 2）时带期望值 codiam=1, sys=1, stsys=1/k, ω=2k
    """
    gens = [(int(v), Fraction(length)) for v, length in gens]
    if not gens or any(v == 0 or length <= 0 for v, length in gens):
        raise ModelError("生成元电压必须非零、长度必须为正")
    edges = tuple(Edge("v0", "v0", length, (v,)) for v, length in gens)
    graph = QuotientGraph(1, ("v0",), edges, "v0")
    expected: Dict[str, Fraction] = {}
    name = "cayley-Z-" + "-".join(str(v) for v, _ in gens)
    if len(gens) == 2 and gens[0] == (1, 1) and gens[1][1] == 1 and gens[1][0] >= 2:
        k = gens[1][0]
        expected = {"codiam": Fraction(1), "sys": Fraction(1), "stsys": Fraction(1, k), "omega": Fraction(2 * k)}
        name = f"cayley-Z-{k}"
    return GalleryInstance(name, graph, expected, "塌缩作用：stsys → 0, ω → ∞")


def build_collapsing(k: int) -> GalleryInstance:
    if k < 2:
        raise ModelError(f"k 必须 ≥ 2: {k}")
    return build_cayley_Z([(1, 1), (k, 1)])


def build_scaled(k: Fraction, base: GalleryInstance) -> GalleryInstance:
    """所有边长乘以 k；长度类期望值乘 k，ω 除以 kⁿ"""
    k = Fraction(k)
    if k <= 0:
        raise ModelError(f"缩放因子必须为正: {k}")
    if not isinstance(base.subject, QuotientGraph):
        raise ModelError("只能缩放图实例")
    graph = base.subject.scaled(k)
    expected = {}
    for key, value in base.expected.items():
        expected[key] = value / k ** graph.rank if key == "omega" else value * k
    return GalleryInstance(f"{base.name}-x{k}", graph, expected, "非塌缩作用：边长整体放大")


def build_noncollapsing(k: int, p: int) -> GalleryInstance:
    """k·C(ℤ, {±1, ±p})：期望 diam = k, stsys = k/p, ω = 2p/k"""
    if k < 2 or p < 2:
        raise ModelError(f"k, p 必须 ≥ 2: k={k}, p={p}")
    return build_scaled(k, build_collapsing(p))


def build_star_of_loops(n: int, spoke: Fraction = Fraction(5), loop: Fraction = Fraction(1)) -> GalleryInstance:
    """
    中心顶点 c 连出 n 条长 ℓ 的辐条，每个端点挂一个电压 eᵢ、长 σ 的环

    从中心出发的轨道必须沿辐条来回，QBD 偏差随 n 增长
    """
    spoke, loop = Fraction(spoke), Fraction(loop)
    if n < 1 or spoke <= 0 or loop <= 0:
        raise ModelError("star_of_loops 参数非法")
    vertices = ("c",) + tuple(f"p{i + 1}" for i in range(n))
    edges = []
    for i in range(n):
        edges.append(Edge("c", f"p{i + 1}", spoke, (0,) * n))
        edges.append(Edge(f"p{i + 1}", f"p{i + 1}", loop, _unit(n, i)))
    graph = QuotientGraph(n, vertices, tuple(edges), "c")
    expected = {
        "sys": loop,
        "stsys": loop,
        "omega": Fraction(2 ** n, math.factorial(n)) / loop ** n,
        "codiam": spoke + loop / 2 if n == 1 else 2 * spoke + loop,
    }
    return GalleryInstance(f"star-of-loops-{n}", graph, expected, "来回穿越辐条")


def _sqrt_norm(m: Fraction, bits: int) -> RationalInterval:
    return RationalInterval.point(m) + sqrt(m, bits)


def _abs_norm(m: Fraction, bits: int) -> RationalInterval:
    return RationalInterval.point(m)


def build_sqrt_metric() -> GalleryInstance:
    """|||m||| = |m| + √|m|：满足近似内度量性质但偏差无界"""
    metric = ExplicitOrbitMetric("sqrt", _sqrt_norm, length_space=False)
    return GalleryInstance("sqrt-metric", metric, {"stsys": Fraction(1), "deviation@10000": Fraction(100)},
                           "非长度空间的偏差 √|m|")


def build_abs_metric() -> GalleryInstance:
    metric = ExplicitOrbitMetric("abs", _abs_norm, length_space=True)
    return GalleryInstance("abs-metric", metric, {"stsys": Fraction(1), "deviation@10000": Fraction(0)})


def build_normed_lattice(options: dict) -> GalleryInstance:
    """
    赋范格

    options 示例:
        {"kind": "linf", "n": 2, "scale": "1"}
        {"kind": "weighted_l1", "weights": ["1", "2"]}
        {"kind": "polytope", "vertices": [["1","0"], ["0","1"], ["1","1"]], "basis": [[2,1],[1,2]]}
    """
    kind = options.get("kind")
    basis = options.get("basis")
    if basis is not None:
        basis = [[Fraction(x) for x in row] for row in basis]
    if kind == "linf":
        n = int(options.get("n", 2))
        scale = Fraction(options.get("scale", 1))
        space = linf_space(n, scale, basis)
        expected = {}
        if basis is None:
            expected = {"stsys": 1 / scale, "omega": (2 * scale) ** n, "codiam": 1 / (2 * scale)}
        return GalleryInstance(f"linf-{n}", space, expected, "ℓ^∞ 标准格：上界取等")
    if kind == "weighted_l1":
        weights = [Fraction(w) for w in options["weights"]]
        space = weighted_l1_space(weights, basis)
        expected = {}
        if basis is None:
            expected = {
                "stsys": min(weights),
                "omega": Fraction(2 ** len(weights), math.factorial(len(weights))) / math.prod(weights),
                "codiam": sum(weights) / 2,
            }
        return GalleryInstance(f"weighted-l1-{len(weights)}", space, expected, "加权 ℓ¹ 比较格")
    if kind == "polytope":
        codiameter = options.get("codiameter")
        space = polytope_space(options["vertices"], basis, Fraction(codiameter) if codiameter is not None else None)
        return GalleryInstance(options.get("name", f"polytope-{space.rank}"), space, {})
    raise ModelError(f"未知的赋范格类型: {kind!r}")


def lower_equality_lattice(n: int, D: Fraction, sigma: Fraction) -> GalleryInstance:
    """
    下界取等的比较格：权重 (σ, 2D, …, 2D) 的加权 ℓ¹ 范数与标准格

    stsys = σ、codiam = nD − D + σ/2 时 Margulis 下界给出 σ 的量级
    """
    D, sigma = Fraction(D), Fraction(sigma)
    weights = [sigma] + [2 * D] * (n - 1)
    return build_normed_lattice({"kind": "weighted_l1", "weights": weights})


def all_instances() -> List[GalleryInstance]:
    """gallery --all 覆盖的实例"""
    instances = [build_rose(n) for n in (1, 2, 3)]
    instances += [build_collapsing(k) for k in (2, 3, 5)]
    instances += [build_noncollapsing(4, 2), build_noncollapsing(3, 5)]
    instances += [build_star_of_loops(n) for n in (1, 2, 3)]
    instances += [
        build_sqrt_metric(),
        build_abs_metric(),
        build_normed_lattice({"kind": "linf", "n": 2}),
        build_normed_lattice({"kind": "linf", "n": 3}),
        build_normed_lattice({"kind": "weighted_l1", "weights": ["1", "2"]}),
    ]
    return instances


def find_instance(name: str) -> GalleryInstance:
    for instance in all_instances():
        if instance.name == name:
            return instance
    raise ModelError(f"实例库中没有 {name!r}")


# ==================== 随机实例 ====================

def random_instance(
    seed: int,
    n: int = 2,
    max_vertices: int = 6,
    max_edges: int = 12,
    numerators: Tuple[int, int] = (1, 9),
    denominators: Tuple[int, int] = (1, 4),
    config: ComputeConfig = None,
) -> QuotientGraph:
    """
    随机合法商图（种子确定）

    先随机生成树保证连通，再补环边；不合法的抽样丢弃并记录

    Raises:
        ModelError: 参数超出桌面规模，或重试次数用尽
    """
    config = config or DEFAULT_COMPUTE_CONFIG
    if not 1 <= n <= 3 or max_vertices > 6 or max_edges > 12:
        raise ModelError("随机实例规模超出范围 (n ≤ 3, ≤ 6 顶点, ≤ 12 边)")
    rng = np.random.default_rng(seed)

    def length() -> Fraction:
        return Fraction(int(rng.integers(numerators[0], numerators[1] + 1)),
                        int(rng.integers(denominators[0], denominators[1] + 1)))

    def voltage() -> Tuple[int, ...]:
        return tuple(int(x) for x in rng.integers(-1, 2, size=n))

    for attempt in range(config.random_retry_cap):
        count = int(rng.integers(1, max_vertices + 1))
        vertices = tuple(f"v{i}" for i in range(count))
        edges: List[Edge] = []
        for i in range(1, count):
            parent = int(rng.integers(0, i))
            edges.append(Edge(vertices[parent], vertices[i], length(), voltage()))
        extra = int(rng.integers(n, max_edges - len(edges) + 1)) if max_edges - len(edges) >= n else 0
        for _ in range(extra):
            tail, head = (vertices[int(i)] for i in rng.integers(0, count, size=2))
            edges.append(Edge(tail, head, length(), voltage()))
        graph = QuotientGraph(n, vertices, tuple(edges), "v0")
        problems = validate(graph)
        if not problems:
            return graph
        logger.debug(f"随机实例 seed={seed} 第 {attempt} 次抽样丢弃: {problems}")
    raise ModelError(f"随机实例生成重试 {config.random_retry_cap} 次仍失败 (seed={seed})")


# ==================== 期望值核对 ====================

def compute_invariant(instance: GalleryInstance, key: str, config: ComputeConfig = None) -> Fraction:
    """按实例类型计算 expected 中的某一项"""
    subject = instance.subject
    if isinstance(subject, QuotientGraph):
        if key == "sys":
            return invariants.systole(subject, config)[0]
        if key == "stsys":
            return stable_systole(stable_unit_ball(subject, config))[0]
        if key == "omega":
            return invariants.asymptotic_volume_exact(subject, config)
        if key == "codiam":
            return quotient_diameter(subject)
    elif isinstance(subject, NormedLatticeSpace):
        if key == "stsys":
            return stable_systole(subject.ball, subject.basis)[0]
        if key == "omega":
            return ball_volume(subject.ball) / subject.covolume
        if key == "codiam":
            return subject.codiameter()
    else:
        if key == "stsys":
            return explicit_stable_systole(subject, config)
        if key.startswith("deviation@"):
            envelope, _ = explicit_metric_deviation(subject, int(key.split("@")[1]), config)
            if not envelope.is_point:
                raise ModelError(f"{instance.name}: {key} 的包络不是精确值 {envelope}")
            return envelope.lo
    raise ModelError(f"{instance.name} ({instance.kind}) 不支持不变量 {key!r}")


def check_instance(instance: GalleryInstance, config: ComputeConfig = None) -> List[Tuple[str, Fraction, Fraction]]:
    """
    Returns:
        [(键, 期望值, 计算值)]
    """
    rows = []
    for key, value in instance.expected.items():
        computed = compute_invariant(instance, key, config)
        if computed != value:
            logger.warning(f"{instance.name}: {key} 期望 {value}，计算得 {computed}")
        rows.append((key, value, computed))
    return rows
