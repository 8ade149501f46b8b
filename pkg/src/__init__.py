"""
PeriodicMetrics - ℤⁿ 周期度量图的精确不变量与不等式验证工具
"""

__version__ = "1.0.0"
__author__ = "PeriodicMetrics Team"

from .config import ComputeConfig, AppConfig, DEFAULT_COMPUTE_CONFIG, DEFAULT_APP_CONFIG
from .errors import PeriodicMetricsError, ModelError, BudgetExceeded, RegionError, PreconditionError
from .interval import RationalInterval, Verdict
from .periodic_model import (
    Edge, QuotientGraph, CoverPoint, ExplicitOrbitMetric,
    validate, orbit_distance, orbit_distance_cutoff, orbit_ball, cover_distance, quotient_diameter,
)
from .stable_geometry import (
    StableBall, NormedLatticeSpace, stable_unit_ball, gauge, ball_volume,
    stable_systole, parallelohedron_check, dirichlet_membership,
)
from .invariants import (
    systole, mass, mass_table, annuli_counts,
    verify_margulis, verify_annuli, verify_components, compute_report,
)
from .constants import ParamSet, all_constants
from .path_splitting import Polyline, IntervalSelection, bp_search, bp_verify
from .model_io import load_model, parse_model, dump_model
from .experiments import ExperimentRunner, Job, TaskStatus, TaskResult

__all__ = [
    # 配置与错误
    "ComputeConfig", "AppConfig", "DEFAULT_COMPUTE_CONFIG", "DEFAULT_APP_CONFIG",
    "PeriodicMetricsError", "ModelError", "BudgetExceeded", "RegionError", "PreconditionError",
    "RationalInterval", "Verdict",
    # 周期模型
    "Edge", "QuotientGraph", "CoverPoint", "ExplicitOrbitMetric",
    "validate", "orbit_distance", "orbit_distance_cutoff", "orbit_ball", "cover_distance", "quotient_diameter",
    # 稳定几何
    "StableBall", "NormedLatticeSpace", "stable_unit_ball", "gauge", "ball_volume",
    "stable_systole", "parallelohedron_check", "dirichlet_membership",
    # 不变量
    "systole", "mass", "mass_table", "annuli_counts",
    "verify_margulis", "verify_annuli", "verify_components", "compute_report",
    # 常数、路径分割、读写
    "ParamSet", "all_constants",
    "Polyline", "IntervalSelection", "bp_search", "bp_verify",
    "load_model", "parse_model", "dump_model",
    "ExperimentRunner", "Job", "TaskStatus", "TaskResult",
]
