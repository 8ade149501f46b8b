"""
PeriodicMetrics - 不变量引擎
系统、渐近体积、QBD 偏差、同调质量与分量数、环带计数，以及各不等式的验证报告
"""

import heapq
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from . import constants
from .config import ComputeConfig, DEFAULT_COMPUTE_CONFIG
from .errors import BudgetExceeded, ModelError, PreconditionError, RegionError
from .exact import LatticeVector, fraction_str
from .interval import RationalInterval, Verdict, decide_le, nth_root
from .periodic_model import (
    QuotientGraph,
    iter_cover_dijkstra,
    orbit_ball,
    quotient_diameter,
    vec_add,
    as_lattice_vector,
)
from .stable_geometry import NormedLatticeSpace, StableBall, ball_volume, stable_systole, stable_unit_ball

logger = logging.getLogger(__name__)


def _vector_str(gamma: Sequence[int]) -> str:
    return "(" + ",".join(str(x) for x in gamma) + ")"


# ==================== 系统与体积 ====================

def systole(g: QuotientGraph, config: ComputeConfig = None) -> Tuple[Fraction, Tuple[str, LatticeVector]]:
    """
    min_{v, γ≠0} d((v,0), (v,γ))

    Returns:
        (值, (顶点, γ))
    """
    best: Optional[Tuple[Fraction, Tuple[str, LatticeVector]]] = None
    zero = g.zero()
    for vertex in g.vertices:
        bound = best[0] if best is not None else None
        for dist, v, sheet in iter_cover_dijkstra(g, {(vertex, zero): Fraction(0)}, bound=bound, config=config):
            if v == vertex and sheet != zero:
                if best is None or dist < best[0]:
                    best = (dist, (vertex, sheet))
                break
    if best is None:
        raise ModelError("不存在本质闭路（电压秩为 0?）")
    return best


def asymptotic_volume_exact(g: QuotientGraph, config: ComputeConfig = None) -> Fraction:
    """稳定单位球体积（标准格 ℤⁿ 余体积为 1）"""
    return ball_volume(stable_unit_ball(g, config))


def asymptotic_volume_empirical(g: QuotientGraph, radius: Fraction, config: ComputeConfig = None) -> Fraction:
    """#{γ : d(x₀, γ.x₀) < R} / Rⁿ"""
    radius = Fraction(radius)
    return Fraction(len(orbit_ball(g, radius, config))) / radius ** g.rank


# ==================== QBD 偏差 ====================

def qbd_deviation(g: QuotientGraph, radius: Fraction, ball: StableBall = None,
                  config: ComputeConfig = None) -> Tuple[Fraction, LatticeVector]:
    """max_{γ ∈ 球(R)} |d(x₀, γ.x₀) − ‖γ‖_st| 及取到最大值的 γ"""
    ball = ball or stable_unit_ball(g, config)
    best, argmax = Fraction(0), g.zero()
    for gamma, dist in orbit_ball(g, radius, config).items():
        deviation = abs(dist - ball.gauge(gamma))
        if deviation > best:
            best, argmax = deviation, gamma
    return best, argmax


@dataclass
class DeviationProfile:
    """连续两个倍增半径上的实测偏差"""
    radii: List[Fraction]
    values: List[Fraction]
    stabilized: bool

    @property
    def value(self) -> Fraction:
        return self.values[-1]


def measured_deviation(g: QuotientGraph, radius: Fraction, ball: StableBall = None,
                       config: ComputeConfig = None) -> DeviationProfile:
    """
    ĉ(R) 与 ĉ(2R)

    ĉ(2R) ≤ 1.05·ĉ(R) + 10⁻⁹ 时认为已稳定
    """
    ball = ball or stable_unit_ball(g, config)
    radius = Fraction(radius)
    radii = [radius, 2 * radius]
    values = [qbd_deviation(g, r, ball, config)[0] for r in radii]
    stabilized = values[1] <= values[0] * Fraction(105, 100) + Fraction(1, 10 ** 9)
    if not stabilized:
        logger.warning(f"QBD 偏差尚未稳定: ĉ({radii[0]}) = {values[0]}, ĉ({radii[1]}) = {values[1]}")
    return DeviationProfile(radii, values, stabilized)


# ==================== 同调质量 ====================

def closed_walk_lengths(g: QuotientGraph, bound: Fraction,
                        config: ComputeConfig = None) -> Dict[LatticeVector, Fraction]:
    """L(δ) = min_v d((v,0), (v,δ))，只保留 L(δ) < bound 的 δ"""
    bound = Fraction(bound)
    zero = g.zero()
    lengths: Dict[LatticeVector, Fraction] = {}
    for vertex in g.vertices:
        for dist, v, sheet in iter_cover_dijkstra(g, {(vertex, zero): Fraction(0)}, bound=bound, config=config):
            if v == vertex and (sheet not in lengths or dist < lengths[sheet]):
                lengths[sheet] = dist
    return dict(sorted(lengths.items()))


@dataclass
class MassTable:
    """有限区域 {mass < bound} 上的 (质量, 分量数)"""
    bound: Fraction
    entries: Dict[LatticeVector, Tuple[Fraction, int]]

    def lookup(self, gamma: Sequence[int]) -> Tuple[Fraction, int]:
        gamma = tuple(gamma)
        if gamma not in self.entries:
            raise RegionError(f"{_vector_str(gamma)} 的质量 ≥ {fraction_str(self.bound)}，不在已枚举区域内")
        return self.entries[gamma]


def _mass_search(g: QuotientGraph, bound: Optional[Fraction], target: Optional[LatticeVector],
                 config: ComputeConfig) -> Dict[LatticeVector, Tuple[Fraction, int]]:
    """
    集散点增广的字典序 Dijkstra，代价为 (质量, 分量数)

    状态 ("hub", s) 代表已拼出同调类 s；从集散点可在任一顶点 a 开始一条
    闭路（分量数 +1），闭路回到 a 时回到集散点
    """
    zero = g.zero()
    heap = [(Fraction(0), 0, ("hub", zero))]
    best: Dict[tuple, Tuple[Fraction, int]] = {("hub", zero): (Fraction(0), 0)}
    settled = set()
    table: Dict[LatticeVector, Tuple[Fraction, int]] = {}

    def push(state: tuple, mass: Fraction, parts: int):
        if (bound is not None and mass >= bound) or state in settled:
            return
        previous = best.get(state)
        if previous is None or (mass, parts) < previous:
            best[state] = (mass, parts)
            heapq.heappush(heap, (mass, parts, state))

    while heap:
        mass, parts, state = heapq.heappop(heap)
        if state in settled:
            continue
        settled.add(state)
        if len(settled) > config.node_budget:
            raise BudgetExceeded("mass_states", config.node_budget)

        if state[0] == "hub":
            sheet = state[1]
            table[sheet] = (mass, parts)
            if target is not None and sheet == target:
                break
            for anchor in g.vertices:
                push(("walk", anchor, anchor, sheet), mass, parts + 1)
        else:
            _, vertex, anchor, sheet = state
            if vertex == anchor:
                push(("hub", sheet), mass, parts)
            for neighbor, length, voltage, _ in g.adjacency[vertex]:
                push(("walk", neighbor, anchor, vec_add(sheet, voltage)), mass + length, parts)
    return table


def mass_table(g: QuotientGraph, bound: Fraction, config: ComputeConfig = None) -> MassTable:
    """所有 mass(γ) < bound 的 γ 的 (质量, 分量数)"""
    config = config or DEFAULT_COMPUTE_CONFIG
    bound = Fraction(bound)
    if bound <= 0:
        raise ModelError(f"区域上界必须为正: {bound}")
    entries = _mass_search(g, bound, None, config)
    return MassTable(bound, dict(sorted(entries.items())))


def mass(g: QuotientGraph, gamma: Sequence[int], config: ComputeConfig = None) -> Tuple[Fraction, int]:
    """
    同调质量 |γ|_{H₁} 与最少分量数 N(γ)

    质量 = min Σ L(γᵢ)（γ = Σγᵢ），分量数在质量最小的分解中取最少
    """
    config = config or DEFAULT_COMPUTE_CONFIG
    gamma = as_lattice_vector(g, gamma)
    if not any(gamma):
        return Fraction(0), 0
    entries = _mass_search(g, None, gamma, config)
    return entries[gamma]


def annuli_counts_from_table(table: MassTable, delta: Fraction, kmax: int) -> List[int]:
    """v(kΔ, (k+1)Δ) = #{γ : kΔ ≤ mass(γ) < (k+1)Δ}, k = 0..kmax"""
    delta = Fraction(delta)
    if delta <= 0:
        raise ModelError(f"Δ 必须为正: {delta}")
    if (kmax + 1) * delta > table.bound:
        raise RegionError(f"环带 k={kmax} 超出已枚举区域 (上界 {fraction_str(table.bound)})")
    counts = [0] * (kmax + 1)
    for mass_value, _ in table.entries.values():
        k = math.floor(mass_value / delta)
        if k <= kmax:
            counts[k] += 1
    return counts


def annuli_counts(g: QuotientGraph, delta: Fraction, kmax: int, config: ComputeConfig = None) -> List[int]:
    delta = Fraction(delta)
    if delta <= 0:
        raise ModelError(f"Δ 必须为正: {delta}")
    table = mass_table(g, (kmax + 1) * delta, config)
    return annuli_counts_from_table(table, delta, kmax)


# ==================== 验证 ====================

@dataclass
class CheckResult:
    """单个不等式的判定"""
    name: str
    verdict: Verdict
    equality: bool = False
    lhs: Optional[RationalInterval] = None
    rhs: Optional[RationalInterval] = None

    def to_json(self) -> dict:
        data = {"verdict": self.verdict.value, "equality": self.equality}
        if self.lhs is not None:
            data["lhs"] = self.lhs.to_json()
        if self.rhs is not None:
            data["rhs"] = self.rhs.to_json()
        return data


def check_le(name: str, lhs, rhs, config: ComputeConfig) -> CheckResult:
    """lhs/rhs 可以是有理数，也可以是 bits → 区间 的函数"""
    left = lhs if callable(lhs) else (lambda bits, v=lhs: RationalInterval.point(v))
    right = rhs if callable(rhs) else (lambda bits, v=rhs: RationalInterval.point(v))
    verdict, equal = decide_le(left, right, config.precision_bits, config.max_precision_bits)
    bits = config.precision_bits
    return CheckResult(name, verdict, equal, left(bits), right(bits))


def overall_verdict(results) -> Verdict:
    verdicts = [r.verdict for r in results]
    if Verdict.FAIL in verdicts:
        return Verdict.FAIL
    if Verdict.UNDECIDED in verdicts:
        return Verdict.UNDECIDED
    return Verdict.PASS


@dataclass
class MargulisInputs:
    n: int
    stsys: Fraction
    omega: Fraction
    codiam: Optional[Fraction] = None
    omega_upper: Optional[Fraction] = None


@dataclass
class MargulisCheck:
    lower: CheckResult
    upper: CheckResult
    lower_with_bound: Optional[CheckResult] = None
    upper_with_bound: Optional[CheckResult] = None

    @property
    def results(self) -> List[CheckResult]:
        return [self.lower, self.upper] + ([self.lower_with_bound] if self.lower_with_bound else [])

    def to_json(self) -> dict:
        data = {"lower": self.lower.to_json(), "upper": self.upper.to_json()}
        if self.lower_with_bound is not None:
            data["lower_with_Omega"] = self.lower_with_bound.to_json()
        if self.upper_with_bound is not None:
            # Ω > ω 时上界不再是定理结论，只作记录
            data["upper_with_Omega"] = self.upper_with_bound.to_json()
        return data


def verify_margulis(inputs: MargulisInputs, config: ComputeConfig = None) -> MargulisCheck:
    """(2/n!)/(D^{n−1}ω) ≤ stsys ≤ 2/ω^{1/n}"""
    config = config or DEFAULT_COMPUTE_CONFIG
    n, stsys = inputs.n, Fraction(inputs.stsys)

    def upper_fn(omega):
        return lambda bits: 2 / nth_root(omega, n, bits)

    if inputs.codiam is None:
        lower = CheckResult("margulis_lower", Verdict.SKIPPED)
    else:
        lower = check_le("margulis_lower", constants.margulis_lower(n, inputs.codiam, inputs.omega), stsys, config)
    upper = check_le("margulis_upper", stsys, upper_fn(Fraction(inputs.omega)), config)
    check = MargulisCheck(lower, upper)

    if inputs.omega_upper is not None:
        omega_upper = Fraction(inputs.omega_upper)
        if inputs.codiam is not None:
            check.lower_with_bound = check_le(
                "margulis_lower_Omega", constants.margulis_lower(n, inputs.codiam, omega_upper), stsys, config)
        check.upper_with_bound = check_le("margulis_upper_Omega", stsys, upper_fn(omega_upper), config)
    return check


@dataclass
class AnnuliCheck:
    delta: Fraction
    deviation: Fraction
    counts: List[int]
    bounds: Tuple[Fraction, Fraction]
    shells: List[CheckResult]
    centered: List[CheckResult]
    deviation_dominated: CheckResult

    @property
    def results(self) -> List[CheckResult]:
        return self.shells + self.centered + [self.deviation_dominated]

    def to_json(self) -> dict:
        return {
            "delta": fraction_str(self.delta),
            "deviation": fraction_str(self.deviation),
            "A": fraction_str(self.bounds[0]),
            "B": fraction_str(self.bounds[1]),
            "counts": self.counts,
            "shells": [s.to_json() for s in self.shells],
            "centered": [c.to_json() for c in self.centered],
            "deviation_le_c_simplified": self.deviation_dominated.to_json(),
        }


def verify_annuli(g: QuotientGraph, delta: Fraction, kmax: int, use_measured_deviation: bool = True,
                  radius: Fraction = Fraction(20), config: ComputeConfig = None) -> AnnuliCheck:
    """
    对 k = 1..kmax 检查 A(kΔ)^{n−1} ≤ v(kΔ,(k+1)Δ) ≤ B(kΔ)^{n−1}

    use_measured_deviation 时用 ĉ(R)·(1+余量) 代替 c(n,D,Ω) 检查 Δ > 4nD + c，
    并单独验证 ĉ ≤ c_simplified；否则只做符号检查（实际规模下必然不满足）

    Raises:
        PreconditionError: Δ ≤ 4nD + c
    """
    config = config or DEFAULT_COMPUTE_CONFIG
    delta = Fraction(delta)
    n = g.rank
    ball = stable_unit_ball(g, config)
    omega = ball_volume(ball)
    diameter = quotient_diameter(g)
    bound_c = constants.c_simplified(constants.ParamSet(n, diameter, omega))

    deviation = measured_deviation(g, radius, ball, config).value
    if use_measured_deviation:
        c_effective = deviation * (1 + config.qbd_margin)
    else:
        c_effective = bound_c
    needed = constants.qbd_delta_min(n, diameter, c_effective)
    if delta <= needed:
        raise PreconditionError(f"Δ = {fraction_str(delta)} ≤ 4nD + c = {float(needed):.6g}")

    counts = annuli_counts(g, delta, kmax, config)
    a, b = constants.annuli_constants(n, omega, delta)
    shells = [CheckResult("shell_0", Verdict.SKIPPED)]
    for k in range(1, kmax + 1):
        scale = (k * delta) ** (n - 1)
        low = check_le(f"shell_{k}_lower", a * scale, counts[k], config)
        high = check_le(f"shell_{k}_upper", counts[k], b * scale, config)
        verdict = overall_verdict([low, high])
        shells.append(CheckResult(f"shell_{k}", verdict, False,
                                  RationalInterval.point(a * scale), RationalInterval.point(b * scale)))

    # 中心环带 v(R−Δ, R+Δ) ≥ nωΔ(R−Δ)^{n−1}，R = (k+1)Δ
    centered = []
    for k in range(1, kmax):
        count = counts[k] + counts[k + 1]
        centered.append(check_le(f"centered_{k + 1}", n * omega * delta * (k * delta) ** (n - 1), count, config))

    dominated = check_le("deviation_le_c_simplified", deviation, bound_c, config)
    return AnnuliCheck(delta, deviation, counts, (a, b), shells, centered, dominated)


@dataclass
class ComponentsCheck:
    gamma: LatticeVector
    mass: Fraction
    parts: int
    trivial: CheckResult
    refined: CheckResult
    sublinear: CheckResult
    threshold: int
    small_case: Fraction

    @property
    def results(self) -> List[CheckResult]:
        return [self.trivial, self.refined, self.sublinear]

    def to_json(self) -> dict:
        return {
            "gamma": list(self.gamma),
            "mass": fraction_str(self.mass),
            "parts": self.parts,
            "trivial": self.trivial.to_json(),
            "refined": self.refined.to_json(),
            "sublinear_or_threshold": self.sublinear.to_json(),
            "N_threshold_digits": len(str(self.threshold)),
            "small_case_bound": fraction_str(self.small_case),
        }


def verify_components(g: QuotientGraph, gamma: Sequence[int], radius: Fraction = Fraction(20),
                      config: ComputeConfig = None) -> ComponentsCheck:
    """
    N(γ) 的三条上界：

    - 平凡界 N ≤ |γ|_{H₁}/sys
    - 精细界 N ≤ 3^{2n}·((1+1/n)ⁿ·ω·ℓⁿ)^{1/(n+1)}
    - 次线性界 N ≤ max(N(n,D,Ω), 2·3^{2n}·Ω^{1/(n+1)}·ℓ^{n/(n+1)})
    """
    config = config or DEFAULT_COMPUTE_CONFIG
    gamma = as_lattice_vector(g, gamma)
    n = g.rank
    mass_value, parts = mass(g, gamma, config)
    sys_value, _ = systole(g, config)
    ball = stable_unit_ball(g, config)
    omega = ball_volume(ball)
    diameter = quotient_diameter(g)
    params = constants.ParamSet(n, diameter, omega)

    trivial = check_le("trivial", parts, mass_value / sys_value, config)
    refined = check_le("refined", parts, lambda bits: constants.refined_bound(n, omega, mass_value, bits), config)
    threshold = constants.N_threshold(params)
    if parts <= threshold:
        sublinear = CheckResult("sublinear_or_threshold", Verdict.PASS, False,
                                RationalInterval.point(parts), RationalInterval.point(threshold))
    else:
        sublinear = check_le("sublinear_or_threshold", parts,
                              lambda bits: constants.sublinear_bound(n, omega, mass_value, bits), config)
    deviation = measured_deviation(g, radius, ball, config).value
    small_case = constants.small_case_bound(n, diameter, omega, deviation)
    return ComponentsCheck(gamma, mass_value, parts, trivial, refined, sublinear, threshold, small_case)


# ==================== 报告 ====================

@dataclass
class InvariantReport:
    n: int
    sys: Fraction
    sys_witness: Tuple[str, LatticeVector]
    stsys: Fraction
    stsys_witness: LatticeVector
    codiam: Fraction
    omega: Fraction
    radius: Fraction
    omega_empirical: Fraction
    deviation: Fraction
    deviation_argmax: LatticeVector
    c_simplified: Fraction
    gh: Fraction
    margulis: MargulisCheck
    flags: Dict[str, CheckResult] = field(default_factory=dict)

    def verdict(self) -> Verdict:
        return overall_verdict(list(self.flags.values()) + self.margulis.results)

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "sys": fraction_str(self.sys),
            "sys_witness": {"vertex": self.sys_witness[0], "gamma": list(self.sys_witness[1])},
            "stsys": fraction_str(self.stsys),
            "stsys_witness": list(self.stsys_witness),
            "codiam": fraction_str(self.codiam),
            "omega": fraction_str(self.omega),
            "radius": fraction_str(self.radius),
            "omega_empirical": fraction_str(self.omega_empirical),
            "qbd_deviation": fraction_str(self.deviation),
            "qbd_argmax": list(self.deviation_argmax),
            "c_simplified_digits": len(str(self.c_simplified.numerator)),
            "gh_bound": fraction_str(self.gh),
            "margulis": self.margulis.to_json(),
            "flags": {name: check.to_json() for name, check in self.flags.items()},
            "verdict": self.verdict().value,
        }


def compute_report(g: QuotientGraph, radius: Fraction = Fraction(20), config: ComputeConfig = None) -> InvariantReport:
    """计算全部不变量并组装验证结果"""
    config = config or DEFAULT_COMPUTE_CONFIG
    radius = Fraction(radius)
    n = g.rank
    ball = stable_unit_ball(g, config)
    omega = ball_volume(ball)
    sys_value, sys_witness = systole(g, config)
    stsys_value, stsys_witness = stable_systole(ball)
    diameter = quotient_diameter(g)
    omega_empirical = asymptotic_volume_empirical(g, radius, config)
    deviation, argmax = qbd_deviation(g, radius, ball, config)
    bound_c = constants.c_simplified(constants.ParamSet(n, diameter, omega))
    logger.info(f"不变量: sys={sys_value}, stsys={stsys_value}, D={diameter}, ω={omega}, ĉ({radius})={deviation}")

    flags = {
        "stsys_le_sys": check_le("stsys_le_sys", stsys_value, sys_value, config),
        "sys_le_2codiam": check_le("sys_le_2codiam", sys_value, 2 * diameter, config),
        "deviation_le_c_simplified": check_le("deviation_le_c_simplified", deviation, bound_c, config),
    }
    margulis = verify_margulis(MargulisInputs(n, stsys_value, omega, diameter), config)
    return InvariantReport(
        n=n, sys=sys_value, sys_witness=sys_witness, stsys=stsys_value, stsys_witness=stsys_witness,
        codiam=diameter, omega=omega, radius=radius, omega_empirical=omega_empirical,
        deviation=deviation, deviation_argmax=argmax, c_simplified=bound_c,
        gh=constants.gh_bound(1 / radius, deviation, diameter), margulis=margulis, flags=flags,
    )


def normed_lattice_margulis(space: NormedLatticeSpace, config: ComputeConfig = None) -> MargulisCheck:
    """赋范格: stsys = 格上最短非零向量，ω = vol(B)/covol"""
    stsys_value, _ = stable_systole(space.ball, space.basis)
    omega = ball_volume(space.ball) / space.covolume
    return verify_margulis(MargulisInputs(space.rank, stsys_value, omega, space.codiameter()), config)
