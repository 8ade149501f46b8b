"""
PeriodicMetrics - 精确有理数线性代数
所有几何判定都在 ℚ 上完成，浮点数只用于候选生成和绘图
"""

import itertools
import math
import re
from fractions import Fraction
from typing import Iterable, List, Optional, Sequence, Tuple, Union

from sympy import QQ, ZZ
from sympy.polys.matrices import DomainMatrix
from sympy.polys.matrices.exceptions import DMNonInvertibleMatrixError

from .errors import ModelError

Rational = Fraction
Point = Tuple[Fraction, ...]
LatticeVector = Tuple[int, ...]

_RATIONAL_RE = re.compile(r"^\s*([+-]?\d+)\s*(?:/\s*(\d+))?\s*$")


def to_fraction(value: Union[int, Fraction, str]) -> Fraction:
    """
    把整数、Fraction 或 "p/q" 字符串转为 Fraction

    浮点数和小数字符串一律拒绝（模型文件必须是精确的）
    """
    if isinstance(value, bool):
        raise ModelError(f"不是有理数: {value!r}")
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        match = _RATIONAL_RE.match(value)
        if not match:
            raise ModelError(f"不是 p/q 形式的有理数: {value!r}")
        num = int(match.group(1))
        den = int(match.group(2)) if match.group(2) else 1
        if den == 0:
            raise ModelError(f"分母为零: {value!r}")
        return Fraction(num, den)
    raise ModelError(f"不支持的数值类型: {type(value).__name__}")


def fraction_str(value: Fraction) -> str:
    """输出 "p/q"（整数输出 "p"）"""
    value = Fraction(value)
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


def dot(a: Sequence[Fraction], b: Sequence[Fraction]) -> Fraction:
    return sum((Fraction(x) * y for x, y in zip(a, b)), Fraction(0))


def _from_domain(value) -> Fraction:
    return Fraction(int(value.numerator), int(value.denominator))


def qq_matrix(rows: Sequence[Sequence[Fraction]]) -> DomainMatrix:
    """构造 ℚ 上的 DomainMatrix"""
    rows = [list(r) for r in rows]
    height = len(rows)
    width = len(rows[0]) if rows else 0
    data = [[QQ(Fraction(x).numerator, Fraction(x).denominator) for x in r] for r in rows]
    return DomainMatrix(data, (height, width), QQ)


def rank(rows: Sequence[Sequence[Fraction]]) -> int:
    if not rows or not rows[0]:
        return 0
    return qq_matrix(rows).rank()


def det(rows: Sequence[Sequence[Fraction]]) -> Fraction:
    if not rows:
        return Fraction(1)
    return _from_domain(qq_matrix(rows).det())


def solve(rows: Sequence[Sequence[Fraction]], rhs: Sequence[Fraction]) -> Optional[List[Fraction]]:
    """
    精确求解方阵方程 A x = b

    Returns:
        解向量；矩阵奇异时返回 None
    """
    size = len(rows)
    a = qq_matrix(rows)
    b = qq_matrix([[value] for value in rhs])
    try:
        x = a.lu_solve(b)
    except DMNonInvertibleMatrixError:
        return None
    column = x.to_list()
    return [_from_domain(column[i][0]) for i in range(size)]


def inverse(rows: Sequence[Sequence[Fraction]]) -> Optional[List[List[Fraction]]]:
    try:
        inv = qq_matrix(rows).inv()
    except DMNonInvertibleMatrixError:
        return None
    return [[_from_domain(x) for x in r] for r in inv.to_list()]


def mat_vec(rows: Sequence[Sequence[Fraction]], vector: Sequence[Fraction]) -> Point:
    return tuple(dot(r, vector) for r in rows)


def lattice_index(vectors: Iterable[Sequence[int]], dim: int) -> int:
    """
    整数向量生成的子群在 ℤⁿ 中的指数

    等于所有 n×n 子式的最大公约数；秩不足时返回 0
    """
    vectors = [tuple(int(x) for x in v) for v in vectors]
    vectors = [v for v in vectors if any(v)]
    if len(vectors) < dim:
        return 0
    divisor = 0
    for subset in itertools.combinations(vectors, dim):
        minor = DomainMatrix([[ZZ(x) for x in v] for v in subset], (dim, dim), ZZ).det()
        divisor = math.gcd(divisor, abs(int(minor)))
        if divisor == 1:
            break
    return divisor


def simplest_between(lo: Fraction, hi: Fraction) -> Fraction:
    """闭区间 [lo, hi] 中分母最小的有理数（连分数法）"""
    if lo > hi:
        raise ValueError("lo > hi")
    if lo <= 0 <= hi:
        return Fraction(0)
    if hi < 0:
        return -simplest_between(-hi, -lo)
    ceil_lo = math.ceil(lo)
    if ceil_lo <= hi:
        return Fraction(ceil_lo)
    whole = math.floor(lo)
    return whole + 1 / simplest_between(1 / (hi - whole), 1 / (lo - whole))


def affine_dimension(points: Sequence[Point]) -> int:
    """点集仿射包的维数（空集记为 -1）"""
    if not points:
        return -1
    origin = points[0]
    diffs = [tuple(p[i] - origin[i] for i in range(len(origin))) for p in points[1:]]
    return rank(diffs) if diffs else 0
