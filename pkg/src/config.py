"""
PeriodicMetrics - 配置文件
ℤⁿ 周期度量图的精确不变量计算工具
"""

from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path


@dataclass(frozen=True)
class ComputeConfig:
    """计算配置（所有精确计算共享）"""
    # 覆盖图 Dijkstra 的节点预算（覆盖图是无限图，必须有硬上限）
    node_budget: int = 2_000_000

    # 简单环枚举上限
    cycle_cap: int = 200_000

    # 区间运算初始精度（二进制位），默认分母 2^64
    precision_bits: int = 64

    # 区间细化的宽度下限：包络宽度小于 2^-128 仍无法判定则记为 undecided
    max_precision_bits: int = 128

    # 实测 QBD 偏差的安全余量（10%）
    qbd_margin: Fraction = Fraction(1, 10)

    # 路径分割搜索：二进网格最大细分深度
    bp_max_depth: int = 12

    # 路径分割搜索：线性方程求解次数上限
    bp_budget: int = 200_000

    # 随机实例生成的重试上限
    random_retry_cap: int = 1000


@dataclass
class AppConfig:
    """应用配置"""
    # 报告输出目录
    out_dir: Path = field(default_factory=lambda: Path("reports"))

    # 输出格式: 'json', 'csv'
    output_format: str = "json"

    # 并发实验数
    max_workers: int = 2

    # 是否输出 SVG 图
    svg: bool = True

    # SVG 中是否写入时间戳元数据（默认关闭，保证输出逐字节一致）
    svg_timestamp: bool = False

    # 详细日志
    verbose: bool = False


# 默认配置实例
DEFAULT_COMPUTE_CONFIG = ComputeConfig()
DEFAULT_APP_CONFIG = AppConfig()
