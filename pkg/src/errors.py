"""
PeriodicMetrics - 异常类型
"""


class PeriodicMetricsError(RuntimeError):
    """所有计算错误的基类"""


class ModelError(PeriodicMetricsError, ValueError):
    """模型或参数不合法（非法图、Ω ≤ 0、σ ≤ 0 等）"""


class BudgetExceeded(PeriodicMetricsError):
    """资源预算耗尽：与数学上的失败严格区分"""

    def __init__(self, resource: str, limit: int):
        self.resource = resource
        self.limit = limit
        super().__init__(f"预算耗尽: {resource} 超过上限 {limit}")


class RegionError(PeriodicMetricsError):
    """查询超出已枚举的格点区域"""


class PreconditionError(PeriodicMetricsError):
    """验证的前提条件不成立（例如 Δ ≤ 4nD + c）"""
