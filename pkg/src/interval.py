"""
PeriodicMetrics - 有理区间运算
含根式的常数用外向舍入的有理区间包络，比较结果为三值判定
"""

import logging
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Callable, Tuple, Union

from sympy import integer_nthroot

from .exact import fraction_str

logger = logging.getLogger(__name__)

Number = Union[int, Fraction]


class Verdict(Enum):
    """验证结论"""
    PASS = "pass"
    FAIL = "fail"
    UNDECIDED = "undecided"
    SKIPPED = "skipped"


@dataclass(frozen=True)
class RationalInterval:
    """闭区间 [lo, hi]，端点为有理数"""
    lo: Fraction
    hi: Fraction

    def __post_init__(self):
        object.__setattr__(self, "lo", Fraction(self.lo))
        object.__setattr__(self, "hi", Fraction(self.hi))
        if self.lo > self.hi:
            raise ValueError(f"区间端点颠倒: [{self.lo}, {self.hi}]")

    @classmethod
    def point(cls, value: Number) -> "RationalInterval":
        return cls(Fraction(value), Fraction(value))

    @property
    def is_point(self) -> bool:
        return self.lo == self.hi

    @property
    def width(self) -> Fraction:
        return self.hi - self.lo

    @property
    def midpoint(self) -> Fraction:
        return (self.lo + self.hi) / 2

    def contains(self, value: Number) -> bool:
        return self.lo <= value <= self.hi

    def __add__(self, other):
        other = _coerce(other)
        return RationalInterval(self.lo + other.lo, self.hi + other.hi)

    __radd__ = __add__

    def __neg__(self):
        return RationalInterval(-self.hi, -self.lo)

    def __sub__(self, other):
        other = _coerce(other)
        return RationalInterval(self.lo - other.hi, self.hi - other.lo)

    def __rsub__(self, other):
        return _coerce(other) - self

    def __mul__(self, other):
        other = _coerce(other)
        products = (self.lo * other.lo, self.lo * other.hi, self.hi * other.lo, self.hi * other.hi)
        return RationalInterval(min(products), max(products))

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = _coerce(other)
        if other.lo <= 0 <= other.hi:
            raise ZeroDivisionError("除数区间包含 0")
        return self * RationalInterval(1 / other.hi, 1 / other.lo)

    def __rtruediv__(self, other):
        return _coerce(other) / self

    def __pow__(self, exponent: int):
        if exponent < 0:
            return RationalInterval.point(1) / (self ** -exponent)
        if exponent == 0:
            return RationalInterval.point(1)
        if self.lo >= 0:
            return RationalInterval(self.lo ** exponent, self.hi ** exponent)
        if self.hi <= 0:
            ends = sorted((self.lo ** exponent, self.hi ** exponent))
            return RationalInterval(ends[0], ends[1])
        if exponent % 2 == 0:
            return RationalInterval(0, max(self.lo ** exponent, self.hi ** exponent))
        return RationalInterval(self.lo ** exponent, self.hi ** exponent)

    def __abs__(self):
        if self.lo >= 0:
            return self
        if self.hi <= 0:
            return -self
        return RationalInterval(0, max(-self.lo, self.hi))

    def to_json(self) -> dict:
        return {"lo": fraction_str(self.lo), "hi": fraction_str(self.hi)}

    def __str__(self):
        if self.is_point:
            return fraction_str(self.lo)
        return f"[{float(self.lo):.6g}, {float(self.hi):.6g}]"


def _coerce(value) -> RationalInterval:
    if isinstance(value, RationalInterval):
        return value
    return RationalInterval.point(value)


def nth_root(value: Number, k: int, bits: int) -> RationalInterval:
    """
    value^(1/k) 的外向舍入包络

    完全 k 次幂返回精确点区间，否则宽度为 2^-bits
    """
    value = Fraction(value)
    if value < 0:
        raise ValueError("负数不能开方")
    if k == 1 or value == 0:
        return RationalInterval.point(value)
    num_root, num_exact = integer_nthroot(value.numerator, k)
    den_root, den_exact = integer_nthroot(value.denominator, k)
    if num_exact and den_exact:
        return RationalInterval.point(Fraction(int(num_root), int(den_root)))

    scale = 1 << bits
    scaled = (value.numerator * scale ** k) // value.denominator
    root, _ = integer_nthroot(scaled, k)
    root = int(root)
    return RationalInterval(Fraction(root, scale), Fraction(root + 1, scale))


def sqrt(value: Number, bits: int) -> RationalInterval:
    return nth_root(value, 2, bits)


def root_of_interval(interval: RationalInterval, k: int, bits: int) -> RationalInterval:
    """对区间开 k 次方（单调，分别对端点取外向包络）"""
    return RationalInterval(nth_root(interval.lo, k, bits).lo, nth_root(interval.hi, k, bits).hi)


def decide_le(lhs: Callable[[int], RationalInterval],
              rhs: Callable[[int], RationalInterval],
              start_bits: int,
              floor_bits: int) -> Tuple[Verdict, bool]:
    """
    判定 lhs ≤ rhs

    lhs/rhs 接受精度位数并返回包络。判定不了就把精度翻倍，
    直到两侧包络宽度都小于 2^-floor_bits

    Returns:
        (结论, 是否精确相等)
    """
    floor = Fraction(1, 1 << floor_bits)
    bits = start_bits
    while True:
        left, right = lhs(bits), rhs(bits)
        if left.hi <= right.lo:
            equal = left.is_point and right.is_point and left.lo == right.lo
            return Verdict.PASS, equal
        if left.lo > right.hi:
            return Verdict.FAIL, False
        if max(left.width, right.width) < floor or bits > 16 * floor_bits:
            logger.debug(f"区间无法判定: {left} vs {right} (精度 {bits} 位)")
            return Verdict.UNDECIDED, False
        bits *= 2
