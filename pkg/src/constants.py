"""
PeriodicMetrics - 显式常数计算
所有整数幂用任意精度整数计算；含根式的量用有理区间包络
"""

import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Optional

from .errors import ModelError
from .exact import fraction_str
from .interval import RationalInterval, nth_root

logger = logging.getLogger(__name__)


def _positive(name: str, value) -> Fraction:
    value = Fraction(value)
    if value <= 0:
        raise ModelError(f"{name} 必须为正: {fraction_str(value)}")
    return value


def _rank(n) -> int:
    if isinstance(n, bool) or int(n) != n or n < 1:
        raise ModelError(f"n 必须是正整数: {n}")
    return int(n)


@dataclass(frozen=True)
class ParamSet:
    """常数的参数 (n, D, Ω[, σ])"""
    n: int
    D: Fraction
    Omega: Fraction
    sigma: Optional[Fraction] = None

    def __post_init__(self):
        object.__setattr__(self, "n", _rank(self.n))
        object.__setattr__(self, "D", _positive("D", self.D))
        object.__setattr__(self, "Omega", _positive("Ω", self.Omega))
        if self.sigma is not None:
            object.__setattr__(self, "sigma", _positive("σ", self.sigma))

    @classmethod
    def from_instance(cls, n: int, D: Fraction, omega: Fraction, sigma: Optional[Fraction] = None) -> "ParamSet":
        """由实例不变量构造，并检查 σ ≤ 2D 与 ΩDⁿ ≥ 1/n!"""
        params = cls(n, D, omega, sigma)
        if params.sigma is not None and params.sigma > 2 * params.D:
            raise ModelError(f"σ = {fraction_str(params.sigma)} > 2D = {fraction_str(2 * params.D)}")
        if params.omega_dn < Fraction(1, math.factorial(params.n)):
            raise ModelError(f"ΩDⁿ = {fraction_str(params.omega_dn)} < 1/n!")
        return params

    @property
    def omega_dn(self) -> Fraction:
        """尺度不变量 ΩDⁿ"""
        return self.Omega * self.D ** self.n

    def scaled(self, factor: Fraction) -> "ParamSet":
        """D → λD, Ω → Ω/λⁿ, σ → λσ"""
        factor = _positive("λ", factor)
        sigma = self.sigma * factor if self.sigma is not None else None
        return ParamSet(self.n, self.D * factor, self.Omega / factor ** self.n, sigma)

    def require_sigma(self) -> Fraction:
        if self.sigma is None:
            raise ModelError("该常数需要 σ")
        return self.sigma


def _prefactor(n: int) -> Fraction:
    return Fraction(math.factorial(n), 2 ** n)


def index_bound(p: ParamSet) -> Fraction:
    """子群 Z 的指数上界 (n!/2ⁿ)·Ω·(3D)ⁿ"""
    return _prefactor(p.n) * p.Omega * (3 * p.D) ** p.n


def coset_distance_bound(p: ParamSet) -> Fraction:
    return _prefactor(p.n) * p.Omega * (3 * p.D) ** (p.n + 1)


def sub_codiameter_bound(p: ParamSet) -> Fraction:
    return p.D + coset_distance_bound(p)


def _lemma_power(p: ParamSet, extra: int) -> Fraction:
    n = p.n
    return (2 ** (n * n + 4 * n + extra) * math.factorial(n) ** (n + 1)
            * p.omega_dn * (p.omega_dn + 1) ** n)


def L_bound(p: ParamSet) -> Fraction:
    """生成元长度上界 2^{n²+4n+3}·(n!)^{n+1}·ΩDⁿ·(ΩDⁿ+1)ⁿ"""
    return _lemma_power(p, 3)


def M_const(p: ParamSet) -> Fraction:
    sigma = p.require_sigma()
    return _lemma_power(p, 4) / sigma


def _sqrt_n(p: ParamSet, bits: int) -> RationalInterval:
    return nth_root(p.n, 2, bits)


def M_prime(p: ParamSet, bits: int = 64) -> RationalInterval:
    """8·(3/2)ⁿ·√n·n!·ΩD^{n+1}"""
    n = p.n
    rational = 8 * Fraction(3, 2) ** n * math.factorial(n) * p.Omega * p.D ** (n + 1)
    return rational * _sqrt_n(p, bits)


def M_dprime(p: ParamSet, bits: int = 64) -> RationalInterval:
    return M_const(p) * _sqrt_n(p, bits)


def M_product(p: ParamSet) -> Fraction:
    """M′·M″，两个 √n 相乘后是精确有理数"""
    n = p.n
    return 8 * Fraction(3, 2) ** n * n * math.factorial(n) * p.Omega * p.D ** (n + 1) * M_const(p)


def M_tprime(p: ParamSet, bits: int = 64) -> RationalInterval:
    """2n·(M′M″+1)·diam(Z\\X)"""
    return RationalInterval.point(2 * p.n * (M_product(p) + 1) * sub_codiameter_bound(p))


def c_full(p: ParamSet, bits: int = 64) -> RationalInterval:
    """2·diam(Z\\X)·(n·M′M″ + n + 1)"""
    return RationalInterval.point(2 * sub_codiameter_bound(p) * (p.n * M_product(p) + p.n + 1))


def c_simplified(p: ParamSet) -> Fraction:
    """2^{n²+6n+10}·n²·(n!)^{n+2}·D·(ΩDⁿ+1)^{n+4}"""
    n = p.n
    return (2 ** (n * n + 6 * n + 10) * n * n * math.factorial(n) ** (n + 2)
            * p.D * (p.omega_dn + 1) ** (n + 4))


def c_floor(n: int, D: Fraction) -> Fraction:
    """常数的下界 2^{n²+6n+8}·n²·(n!)ⁿ·D"""
    n = _rank(n)
    return 2 ** (n * n + 6 * n + 8) * n * n * math.factorial(n) ** n * Fraction(D)


def margulis_lower(n: int, D: Fraction, Omega: Fraction) -> Fraction:
    """(2/n!)/(D^{n−1}·Ω)"""
    n = _rank(n)
    return Fraction(2, math.factorial(n)) / (_positive("D", D) ** (n - 1) * _positive("Ω", Omega))


def margulis_upper(n: int, Omega: Fraction, bits: int = 64) -> RationalInterval:
    """2/Ω^{1/n}"""
    n = _rank(n)
    return 2 / nth_root(_positive("Ω", Omega), n, bits)


def margulis_bounds(p: ParamSet, bits: int = 64):
    return RationalInterval.point(margulis_lower(p.n, p.D, p.Omega)), margulis_upper(p.n, p.Omega, bits)


def gh_bound(scale: Fraction, c: Fraction, D: Fraction) -> Fraction:
    """λ·(c + 2D)"""
    return _positive("λ", scale) * (Fraction(c) + 2 * Fraction(D))


def N_threshold(p: ParamSet) -> int:
    """2^{18n³}·n^{2n}·(n!)^{n(n+2)}·(ΩDⁿ+1)^{6n²}，非整数时取上整"""
    n = p.n
    value = (2 ** (18 * n ** 3) * n ** (2 * n) * math.factorial(n) ** (n * (n + 2))
             * (p.omega_dn + 1) ** (6 * n * n))
    return math.ceil(value)


def sublinear_bound(n: int, Omega: Fraction, length: Fraction, bits: int = 64) -> RationalInterval:
    """2·3^{2n}·Ω^{1/(n+1)}·ℓ^{n/(n+1)} = 2·3^{2n}·(Ω·ℓⁿ)^{1/(n+1)}"""
    n = _rank(n)
    radicand = _positive("Ω", Omega) * Fraction(length) ** n
    return 2 * 3 ** (2 * n) * nth_root(radicand, n + 1, bits)


def refined_bound(n: int, omega: Fraction, length: Fraction, bits: int = 64) -> RationalInterval:
    """3^{2n}·((1+1/n)ⁿ·ω·ℓⁿ)^{1/(n+1)}"""
    n = _rank(n)
    radicand = (1 + Fraction(1, n)) ** n * _positive("ω", omega) * Fraction(length) ** n
    return 3 ** (2 * n) * nth_root(radicand, n + 1, bits)


def small_case_bound(n: int, D: Fraction, omega: Fraction, c: Fraction) -> Fraction:
    """ω·(9nD + c)ⁿ"""
    n = _rank(n)
    return Fraction(omega) * (9 * n * Fraction(D) + Fraction(c)) ** n


def annuli_constants(n: int, omega: Fraction, delta: Fraction):
    """A = n·ω·Δ, B = 3ⁿ·A"""
    n = _rank(n)
    a = n * _positive("ω", omega) * _positive("Δ", delta)
    return a, 3 ** n * a


def qbd_delta_min(n: int, D: Fraction, c: Fraction) -> Fraction:
    return 4 * _rank(n) * Fraction(D) + Fraction(c)


def relative_deviation_bound(c: Fraction, stable: Fraction) -> Fraction:
    """|d/‖γ‖_st − 1| 的上界 c/‖γ‖_st"""
    return Fraction(c) / _positive("‖γ‖_st", stable)


def almost_isometry_upper(c: Fraction, D: Fraction, sigma: Fraction) -> Fraction:
    """上界取等情形：c + 2D + σ"""
    return Fraction(c) + 2 * Fraction(D) + Fraction(sigma)


def almost_isometry_lower(c: Fraction, n: int, D: Fraction) -> Fraction:
    """下界取等情形：c + (2n+2)D"""
    return Fraction(c) + (2 * _rank(n) + 2) * Fraction(D)


@dataclass
class Finding:
    """不构成失败、但需要记录的观察"""
    name: str
    holds: bool
    detail: str = ""


def constants_discrepancy(p: ParamSet, bits: int = 64) -> Finding:
    """σ 取 Margulis 下界时的 c_full 与 c_simplified 对比"""
    sigma = margulis_lower(p.n, p.D, p.Omega)
    full = c_full(ParamSet(p.n, p.D, p.Omega, sigma), bits)
    simplified = c_simplified(p)
    holds = full.hi <= simplified
    detail = f"c_full = {len(str(full.hi.numerator))} 位, c_simplified = {len(str(simplified.numerator))} 位"
    if not holds:
        logger.warning(f"常数不一致: c_full(σ=下界) > c_simplified ({detail})")
    return Finding("c_full_vs_c_simplified", holds, detail)


def _encode(value) -> dict:
    if isinstance(value, RationalInterval):
        return {**value.to_json(), "digits": len(str(abs(value.hi.numerator)))}
    value = Fraction(value)
    return {"value": fraction_str(value), "digits": len(str(abs(value.numerator)))}


def all_constants(p: ParamSet, bits: int = 64) -> Dict[str, dict]:
    """所有常数的 JSON 表示（精确 p/q 字符串及位数）"""
    result = {
        "index_bound": _encode(index_bound(p)),
        "coset_distance_bound": _encode(coset_distance_bound(p)),
        "sub_codiameter_bound": _encode(sub_codiameter_bound(p)),
        "L_bound": _encode(L_bound(p)),
        "c_simplified": _encode(c_simplified(p)),
        "c_floor": _encode(c_floor(p.n, p.D)),
        "N_threshold": _encode(N_threshold(p)),
        "M_prime": _encode(M_prime(p, bits)),
    }
    lower, upper = margulis_bounds(p, bits)
    result["margulis_lower"] = _encode(lower)
    result["margulis_upper"] = _encode(upper)
    # 取等情形的殆等距常数，c 取 c_simplified
    c = c_simplified(p)
    result["almost_isometry_lower"] = _encode(almost_isometry_lower(c, p.n, p.D))
    if p.sigma is not None:
        result["M"] = _encode(M_const(p))
        result["M_dprime"] = _encode(M_dprime(p, bits))
        result["M_tprime"] = _encode(M_tprime(p, bits))
        result["c_full"] = _encode(c_full(p, bits))
        result["almost_isometry_upper"] = _encode(almost_isometry_upper(c, p.D, p.sigma))
    finding = constants_discrepancy(p, bits)
    result["finding_c_full_le_c_simplified"] = {"holds": finding.holds, "detail": finding.detail}
    return result
