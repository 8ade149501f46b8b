"""
PeriodicMetrics - 实验运行器
每个实验是独立任务：计算、判定、原子写出 JSON/CSV/SVG 报告
"""

import csv
import io
import json
import logging
import os
import tempfile
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Union

from . import constants, invariants, plotting
from .config import AppConfig, ComputeConfig, DEFAULT_APP_CONFIG, DEFAULT_COMPUTE_CONFIG
from .errors import BudgetExceeded, ModelError, PeriodicMetricsError
from .exact import fraction_str
from .gallery import GalleryInstance, all_instances, check_instance, find_instance, random_instance
from .interval import Verdict
from .model_io import dump_model
from .path_splitting import bp_search, bp_verify, random_polyline
from .periodic_model import ExplicitOrbitMetric, QuotientGraph, orbit_ball, quotient_diameter, validate
from .stable_geometry import (
    NormedLatticeSpace,
    ball_volume,
    parallelohedron_check,
    stable_systole,
    stable_unit_ball,
)

logger = logging.getLogger(__name__)

Subject = Union[QuotientGraph, NormedLatticeSpace, ExplicitOrbitMetric, None]

# 退出码
EXIT_PASS = 0
EXIT_USAGE = 1
EXIT_FAIL = 2
EXIT_UNDECIDED = 3
EXIT_BUDGET = 4


class TaskStatus(Enum):
    """任务状态"""
    PENDING = "pending"
    PROCESSING = "processing"
    COMPLETED = "completed"
    FAILED = "failed"


@dataclass
class ExperimentOutput:
    """实验函数的返回值：JSON 报告、可选的表格与附加文件（SVG、模型）"""
    verdict: Verdict
    report: dict
    table: Optional[List[dict]] = None
    files: Dict[str, str] = field(default_factory=dict)
    # FAIL 时的退出码（模型本身不合法时为 1）
    fail_code: int = EXIT_FAIL


@dataclass
class Job:
    """一个待运行的实验"""
    experiment: str
    subject: Subject = None
    params: dict = field(default_factory=dict)
    label: str = ""

    @property
    def name(self) -> str:
        return self.label or self.experiment


@dataclass
class TaskResult:
    """任务结果"""
    name: str
    status: TaskStatus
    verdict: Optional[Verdict] = None
    exit_code: int = EXIT_PASS
    outputs: List[str] = field(default_factory=list)
    message: str = ""
    duration: float = 0.0  # 处理耗时


def write_atomic(path: Path, text: str):
    """先写临时文件再 rename，读者永远看不到半个文件"""
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def dump_json(data) -> str:
    return json.dumps(data, indent=2, ensure_ascii=False) + "\n"


def dump_csv(rows: List[dict]) -> str:
    buffer = io.StringIO()
    if rows:
        writer = csv.DictWriter(buffer, fieldnames=list(rows[0].keys()), lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
    return buffer.getvalue()


def _verdict_code(verdict: Verdict, fail_code: int = EXIT_FAIL) -> int:
    if verdict == Verdict.FAIL:
        return fail_code
    if verdict == Verdict.UNDECIDED:
        return EXIT_UNDECIDED
    return EXIT_PASS


def aggregate_exit_code(results: Sequence[TaskResult]) -> int:
    """多个任务的总退出码：用法/模型错误 > 预算 > 失败 > 未定 > 通过"""
    codes = {r.exit_code for r in results}
    for code in (EXIT_USAGE, EXIT_BUDGET, EXIT_FAIL, EXIT_UNDECIDED):
        if code in codes:
            return code
    return EXIT_PASS


def _combine(verdicts: Sequence[Verdict]) -> Verdict:
    if Verdict.FAIL in verdicts:
        return Verdict.FAIL
    if Verdict.UNDECIDED in verdicts:
        return Verdict.UNDECIDED
    return Verdict.PASS


def _require_graph(subject: Subject) -> QuotientGraph:
    if not isinstance(subject, QuotientGraph):
        raise ModelError("该实验需要商图模型 (--model 或图实例)")
    return subject


# ==================== 各实验 ====================

def run_validate(subject: Subject, params: dict, config: ComputeConfig, app: AppConfig) -> ExperimentOutput:
    g = _require_graph(subject)
    problems = validate(g)
    verdict = Verdict.FAIL if problems else Verdict.PASS
    report = {"valid": not problems, "problems": problems, "rank": g.rank,
              "vertices": len(g.vertices), "edges": len(g.edges)}
    return ExperimentOutput(verdict, report, fail_code=EXIT_USAGE)


def run_invariants(subject: Subject, params: dict, config: ComputeConfig, app: AppConfig) -> ExperimentOutput:
    g = _require_graph(subject)
    radius = Fraction(params.get("radius", 20))
    report = invariants.compute_report(g, radius, config)
    files = {}
    if app.svg and g.rank == 2:
        files["stable_ball.svg"] = plotting.stable_ball_svg(stable_unit_ball(g, config),
                                                              timestamp=app.svg_timestamp)
    return ExperimentOutput(report.verdict(), report.to_json(), files=files)


def run_stable_ball(subject: Subject, params: dict, config: ComputeConfig, app: AppConfig) -> ExperimentOutput:
    if isinstance(subject, NormedLatticeSpace):
        ball, basis = subject.ball, subject.basis
    else:
        ball, basis = stable_unit_ball(_require_graph(subject), config), None
    value, witness = stable_systole(ball, basis)
    report = {
        **ball.to_json(),
        "volume": fraction_str(ball_volume(ball)),
        "stsys": fraction_str(value),
        "stsys_witness": list(witness),
        "parallelohedron": parallelohedron_check(ball, basis),
    }
    files = {}
    if app.svg and ball.rank == 2:
        files["stable_ball.svg"] = plotting.stable_ball_svg(ball, timestamp=app.svg_timestamp)
    return ExperimentOutput(Verdict.PASS, report, files=files)


def run_qbd_scan(subject: Subject, params: dict, config: ComputeConfig, app: AppConfig) -> ExperimentOutput:
    """
    扫描 d(x₀, γ.x₀) < R 的全部 γ

    每行: γ, d, 稳定范数, 偏差, 相对偏差界 ĉ/‖γ‖_st, 质量, 分量数。
    质量 ≤ d < R，所以一次 mass_table(R) 覆盖所有行
    """
    g = _require_graph(subject)
    radius = Fraction(params.get("radius", 20))
    ball = stable_unit_ball(g, config)
    distances = orbit_ball(g, radius, config)
    table = invariants.mass_table(g, radius, config)

    scan = []
    for gamma, dist in distances.items():
        stable = ball.gauge(gamma)
        scan.append((gamma, dist, stable, abs(dist - stable)))
    peak = max(row[3] for row in scan)

    rows = []
    for gamma, dist, stable, deviation in scan:
        mass_value, parts = table.lookup(gamma) if any(gamma) else (Fraction(0), 0)
        rows.append({
            "gamma": " ".join(str(x) for x in gamma),
            "d": fraction_str(dist),
            "stable": fraction_str(stable),
            "deviation": fraction_str(deviation),
            "relative_bound": fraction_str(constants.relative_deviation_bound(peak, stable)) if stable else "",
            "mass": fraction_str(mass_value),
            "parts": parts,
        })

    radii = [radius * Fraction(k, 8) for k in range(1, 9)]
    curve = [max(row[3] for row in scan if row[1] < r) for r in radii]
    diameter = quotient_diameter(g)
    bound_c = constants.c_simplified(constants.ParamSet(g.rank, diameter, ball_volume(ball)))
    check = invariants.check_le("deviation_le_c_simplified", peak, bound_c, config)
    report = {
        "radius": fraction_str(radius),
        "orbit_points": len(rows),
        "max_deviation": fraction_str(peak),
        "curve": [{"R": fraction_str(r), "deviation": fraction_str(v)} for r, v in zip(radii, curve)],
        "deviation_le_c_simplified": check.to_json(),
    }
    files = {}
    if app.svg:
        files["deviation.svg"] = plotting.deviation_svg(radii, curve, timestamp=app.svg_timestamp)
    return ExperimentOutput(check.verdict, report, table=rows, files=files)


def run_margulis(subject: Subject, params: dict, config: ComputeConfig, app: AppConfig) -> ExperimentOutput:
    if isinstance(subject, NormedLatticeSpace):
        check = invariants.normed_lattice_margulis(subject, config)
        report = {"space": subject.to_json(), **check.to_json()}
    else:
        g = _require_graph(subject)
        ball = stable_unit_ball(g, config)
        omega = ball_volume(ball)
        stsys, _ = stable_systole(ball)
        diameter = quotient_diameter(g)
        omega_upper = params.get("omega_upper")
        inputs = invariants.MargulisInputs(g.rank, stsys, omega, diameter,
                                           Fraction(omega_upper) if omega_upper is not None else None)
        check = invariants.verify_margulis(inputs, config)
        report = {"n": g.rank, "stsys": fraction_str(stsys), "omega": fraction_str(omega),
                  "codiam": fraction_str(diameter), **check.to_json()}
    return ExperimentOutput(invariants.overall_verdict(check.results), report)


def run_annuli(subject: Subject, params: dict, config: ComputeConfig, app: AppConfig) -> ExperimentOutput:
    g = _require_graph(subject)
    check = invariants.verify_annuli(
        g, Fraction(params["delta"]), int(params["kmax"]),
        use_measured_deviation=params.get("measured_c", True),
        radius=Fraction(params.get("radius", 20)), config=config,
    )
    rows = [{"k": k, "count": count} for k, count in enumerate(check.counts)]
    files = {}
    if app.svg:
        a, b = check.bounds
        n = g.rank
        lower = [float(a * (k * check.delta) ** (n - 1)) for k in range(1, len(check.counts))]
        upper = [float(b * (k * check.delta) ** (n - 1)) for k in range(1, len(check.counts))]
        files["annuli.svg"] = plotting.annuli_svg(check.counts, lower, upper, timestamp=app.svg_timestamp)
    return ExperimentOutput(invariants.overall_verdict(check.results), check.to_json(), table=rows, files=files)


def run_components(subject: Subject, params: dict, config: ComputeConfig, app: AppConfig) -> ExperimentOutput:
    g = _require_graph(subject)
    check = invariants.verify_components(g, params["gamma"], Fraction(params.get("radius", 20)), config)
    return ExperimentOutput(invariants.overall_verdict(check.results), check.to_json())


def run_constants(subject: Subject, params: dict, config: ComputeConfig, app: AppConfig) -> ExperimentOutput:
    sigma = params.get("sigma")
    p = constants.ParamSet(int(params["n"]), Fraction(params["D"]), Fraction(params["Omega"]),
                           Fraction(sigma) if sigma is not None else None)
    report = {"n": p.n, "D": fraction_str(p.D), "Omega": fraction_str(p.Omega),
              **constants.all_constants(p, config.precision_bits)}
    return ExperimentOutput(Verdict.PASS, report)


def run_bp_demo(subject: Subject, params: dict, config: ComputeConfig, app: AppConfig) -> ExperimentOutput:
    """随机折线上的区间选择；找不到时记为发现而不是失败"""
    seed = int(params.get("seed", 0))
    count = int(params.get("count", 1))
    rows = []
    verdicts = []
    for s in range(seed, seed + count):
        path = random_polyline(s, dim=int(params.get("dim", 2)), segments=int(params.get("segments", 4)))
        try:
            selection = bp_search(path, config)
        except BudgetExceeded as e:
            logger.warning(f"路径分割 seed={s}: {e}")
            rows.append({"seed": s, "found": False, "intervals": "", "verified": False})
            verdicts.append(Verdict.UNDECIDED)
            continue
        verified = bp_verify(path, selection)
        verdicts.append(Verdict.PASS if verified else Verdict.FAIL)
        rows.append({"seed": s, "found": True, "intervals": json.dumps(selection.to_json()), "verified": verified})
    report = {"paths": rows, "all_verified": all(r["verified"] for r in rows)}
    return ExperimentOutput(_combine(verdicts), report, table=rows)


def _instances_for(params: dict) -> List[GalleryInstance]:
    if params.get("name"):
        return [find_instance(params["name"])]
    return all_instances()


def run_gallery(subject: Subject, params: dict, config: ComputeConfig, app: AppConfig) -> ExperimentOutput:
    rows = []
    for instance in _instances_for(params):
        logger.info(f"实例库: {instance.name}")
        for key, expected, computed in check_instance(instance, config):
            rows.append({
                "instance": instance.name,
                "kind": instance.kind,
                "key": key,
                "expected": fraction_str(expected),
                "computed": fraction_str(computed) if computed is not None else "",
                "match": computed == expected,
            })
    verdict = Verdict.PASS if all(r["match"] for r in rows) else Verdict.FAIL
    return ExperimentOutput(verdict, {"checks": rows, "matched": sum(r["match"] for r in rows),
                                      "total": len(rows)}, table=rows)


def run_random(subject: Subject, params: dict, config: ComputeConfig, app: AppConfig) -> ExperimentOutput:
    seed = int(params.get("seed", 0))
    g = random_instance(seed, n=int(params.get("n", 2)), config=config)
    text = dump_model(g)
    report = {"seed": seed, "model": json.loads(text)}
    return ExperimentOutput(Verdict.PASS, report, files={"model.json": text})


EXPERIMENTS: Dict[str, Callable[..., ExperimentOutput]] = {
    "validate": run_validate,
    "invariants": run_invariants,
    "stable-ball": run_stable_ball,
    "qbd-scan": run_qbd_scan,
    "margulis": run_margulis,
    "annuli": run_annuli,
    "components": run_components,
    "constants": run_constants,
    "bp-demo": run_bp_demo,
    "gallery": run_gallery,
    "random": run_random,
}

# 表格型实验总是输出 CSV
_ALWAYS_CSV = {"qbd-scan"}


class ExperimentRunner:
    """
    实验运行器
    - 每个实验写入 out_dir/<任务名>/
    - 多个任务可并发（线程池），写出是原子的
    - 异常按类型映射到退出码
    """

    def __init__(self, compute_config: ComputeConfig = None, app_config: AppConfig = None):
        self.compute_config = compute_config or DEFAULT_COMPUTE_CONFIG
        self.app_config = app_config or DEFAULT_APP_CONFIG
        self._results: List[TaskResult] = []
        self._lock = threading.Lock()

    def _write(self, job: Job, output: ExperimentOutput) -> List[str]:
        folder = Path(self.app_config.out_dir) / job.name
        written = []
        report = {"experiment": job.experiment, "verdict": output.verdict.value, **output.report}
        path = folder / "report.json"
        write_atomic(path, dump_json(report))
        written.append(str(path))
        if output.table is not None and (self.app_config.output_format == "csv" or job.experiment in _ALWAYS_CSV):
            path = folder / "table.csv"
            write_atomic(path, dump_csv(output.table))
            written.append(str(path))
        for name, text in output.files.items():
            path = folder / name
            write_atomic(path, text)
            written.append(str(path))
        return written

    def run(self, job: Job) -> TaskResult:
        """
        运行单个实验

        Returns:
            任务结果（不抛异常，错误体现在 exit_code 和 message）
        """
        start_time = time.time()
        experiment = EXPERIMENTS.get(job.experiment)
        if experiment is None:
            return TaskResult(job.name, TaskStatus.FAILED, exit_code=EXIT_USAGE,
                              message=f"未知实验: {job.experiment}")
        logger.info(f"开始实验 {job.name}")
        try:
            output = experiment(job.subject, job.params, self.compute_config, self.app_config)
            outputs = self._write(job, output)
            result = TaskResult(job.name, TaskStatus.COMPLETED, output.verdict,
                                _verdict_code(output.verdict, output.fail_code), outputs, "处理完成")
        except BudgetExceeded as e:
            result = TaskResult(job.name, TaskStatus.FAILED, exit_code=EXIT_BUDGET, message=str(e))
        except (PeriodicMetricsError, KeyError) as e:
            result = TaskResult(job.name, TaskStatus.FAILED, exit_code=EXIT_USAGE, message=str(e))
        result.duration = time.time() - start_time

        with self._lock:
            self._results.append(result)
        return result

    def run_batch(self, jobs: Sequence[Job],
                  progress_callback: Callable[[int, int, TaskResult], None] = None) -> List[TaskResult]:
        """
        并发运行多个实验

        Args:
            jobs: 任务列表（任务名必须互不相同）
            progress_callback: 每完成一个任务调用 (完成数, 总数, 结果)

        Returns:
            与 jobs 同序的结果列表
        """
        names = [job.name for job in jobs]
        if len(set(names)) != len(names):
            raise ModelError("任务名重复，报告会互相覆盖")
        total = len(jobs)
        results: List[Optional[TaskResult]] = [None] * total
        done = [0]

        def work(index: int):
            result = self.run(jobs[index])
            results[index] = result
            if progress_callback:
                with self._lock:
                    done[0] += 1
                    count = done[0]
                progress_callback(count, total, result)

        with ThreadPoolExecutor(max_workers=max(1, self.app_config.max_workers)) as pool:
            list(pool.map(work, range(total)))
        return results

    @property
    def results(self) -> List[TaskResult]:
        """获取当前结果"""
        with self._lock:
            return list(self._results)


def run_experiment(name: str, subject: Subject = None, params: dict = None,
                   compute_config: ComputeConfig = None, app_config: AppConfig = None) -> TaskResult:
    """运行单个实验并写出报告（不经过命令行）"""
    runner = ExperimentRunner(compute_config, app_config)
    return runner.run(Job(name, subject, dict(params or {})))
