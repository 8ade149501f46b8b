#!/usr/bin/env python3
"""
PeriodicMetrics - ℤⁿ 周期度量图的精确不变量与不等式验证工具

使用方法:
    python main.py --model rose2.json invariants
    python main.py --instance cayley-Z-3 qbd-scan --radius 30
    python main.py gallery --all
    python main.py constants --n 1 --D 1 --Omega 2
"""

import argparse
import dataclasses
import logging
import sys
from fractions import Fraction
from pathlib import Path

# 添加 src 目录到路径
sys.path.insert(0, str(Path(__file__).parent))

from src.config import AppConfig, ComputeConfig
from src.errors import PeriodicMetricsError
from src.experiments import EXIT_USAGE, ExperimentRunner, Job, TaskResult, TaskStatus, aggregate_exit_code
from src.gallery import find_instance
from src.model_io import load_model, parse_ball
from src.stable_geometry import polytope_space


def log(message: str = ""):
    """进度信息写 stderr，stdout 留给机器可读输出"""
    print(message, file=sys.stderr)


def _rational(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"不是有理数: {text!r}")


def build_configs(args) -> tuple:
    compute = ComputeConfig()
    overrides = {}
    if args.precision is not None:
        overrides["precision_bits"] = args.precision
        overrides["max_precision_bits"] = max(compute.max_precision_bits, args.precision)
    if args.budget is not None:
        overrides["node_budget"] = args.budget
    compute = dataclasses.replace(compute, **overrides)
    app = AppConfig(
        out_dir=Path(args.out),
        output_format=args.format,
        max_workers=args.workers,
        svg=not args.no_svg,
        verbose=args.verbose,
    )
    return compute, app


def resolve_subject(args):
    """--model / --instance / --ball 三选一"""
    if args.model:
        return load_model(args.model)
    if args.instance:
        return find_instance(args.instance).subject
    if args.ball:
        ball = parse_ball(Path(args.ball).read_text(encoding="utf-8"))
        return polytope_space(ball.vertices)
    return None


def build_jobs(args, subject) -> list:
    command = args.command
    if command == "qbd-scan":
        return [Job(command, subject, {"radius": args.radius})]
    if command == "invariants":
        return [Job(command, subject, {"radius": args.radius})]
    if command == "annuli":
        return [Job(command, subject, {"delta": args.delta, "kmax": args.kmax,
                                       "measured_c": args.measured_c, "radius": args.radius})]
    if command == "components":
        return [Job(command, subject, {"gamma": args.gamma, "radius": args.radius})]
    if command == "margulis":
        return [Job(command, subject, {"omega_upper": args.omega_upper})]
    if command == "constants":
        return [Job(command, None, {"n": args.n, "D": args.D, "Omega": args.Omega, "sigma": args.sigma})]
    if command == "bp-demo":
        return [Job(command, None, {"seed": args.seed, "count": args.count,
                                    "dim": args.dim, "segments": args.segments})]
    if command == "gallery":
        return [Job(command, None, {"name": args.name})]
    if command == "random":
        return [Job(command, None, {"seed": s, "n": args.n}, label=f"random-{s}")
                for s in range(args.seed, args.seed + args.count)]
    return [Job(command, subject)]


def run_cli(args) -> int:
    """命令行模式"""
    log("=" * 60)
    log("PeriodicMetrics - 周期度量不变量验证")
    log("=" * 60)

    compute, app = build_configs(args)
    try:
        subject = resolve_subject(args)
    except (PeriodicMetricsError, OSError) as e:
        log(f"❌ 错误: {e}")
        return EXIT_USAGE

    jobs = build_jobs(args, subject)
    log(f"\n📂 输出目录: {app.out_dir}")
    log(f"🔢 精度: {compute.precision_bits} 位, 节点预算: {compute.node_budget}")
    log(f"🚀 开始 {len(jobs)} 个实验...")
    log("-" * 60)

    def progress_callback(done: int, total: int, result: TaskResult):
        mark = "✅" if result.status == TaskStatus.COMPLETED and result.exit_code == 0 else "❌"
        verdict = result.verdict.value if result.verdict else "error"
        log(f"[{done}/{total}] {mark} {result.name}: {verdict} ({result.duration:.2f}s) {result.message}")

    runner = ExperimentRunner(compute, app)
    results = runner.run_batch(jobs, progress_callback)

    log("-" * 60)
    for result in results:
        for path in result.outputs:
            log(f"   📄 {path}")
    code = aggregate_exit_code(results)
    log(f"\n{'✅ 全部通过' if code == 0 else f'❌ 退出码 {code}'}")
    return code


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        description="PeriodicMetrics - ℤⁿ 周期度量图的精确不变量与不等式验证",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
退出码:
    0 通过, 1 用法/模型错误, 2 验证失败, 3 区间比较未定, 4 预算耗尽

示例:
    python main.py --model rose2.json invariants
    python main.py --instance rose-2 annuli --delta 9 --kmax 5
    python main.py gallery --all
        """
    )
    source = parser.add_mutually_exclusive_group()
    source.add_argument("--model", help="商图模型 JSON 文件")
    source.add_argument("--instance", help="实例库中的实例名 (如 rose-2, cayley-Z-3, linf-2)")
    source.add_argument("--ball", help="单位球 JSON 文件（与标准格 ℤⁿ 组成赋范格）")
    parser.add_argument("--out", default="reports", help="报告输出目录 (默认: reports)")
    parser.add_argument("--format", choices=["json", "csv"], default="json", help="输出格式 (默认: json)")
    parser.add_argument("--precision", type=int, help="区间运算初始精度（位）")
    parser.add_argument("--budget", type=int, help="覆盖图节点预算")
    parser.add_argument("--workers", type=int, default=2, help="并发实验数 (默认: 2)")
    parser.add_argument("--no-svg", action="store_true", help="不输出 SVG 图")
    parser.add_argument("-v", "--verbose", action="store_true", help="详细日志")

    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("validate", help="检查模型合法性")
    p = sub.add_parser("invariants", help="计算全部不变量")
    p.add_argument("--radius", type=_rational, default=Fraction(20))
    sub.add_parser("stable-ball", help="稳定单位球")
    p = sub.add_parser("qbd-scan", help="QBD 偏差扫描 (CSV)")
    p.add_argument("--radius", type=_rational, default=Fraction(20))
    p = sub.add_parser("margulis", help="Margulis 不等式")
    p.add_argument("--omega-upper", type=_rational, help="渐近体积的上界 Ω ≥ ω")
    p = sub.add_parser("annuli", help="环带计数")
    p.add_argument("--delta", type=_rational, required=True)
    p.add_argument("--kmax", type=int, required=True)
    p.add_argument("--measured-c", action=argparse.BooleanOptionalAction, default=True,
                   help="用实测偏差代替显式常数检查 Δ 的前提")
    p.add_argument("--radius", type=_rational, default=Fraction(20))
    p = sub.add_parser("components", help="最优闭链的分量数")
    p.add_argument("--gamma", type=int, nargs="+", required=True)
    p.add_argument("--radius", type=_rational, default=Fraction(20))
    p = sub.add_parser("constants", help="显式常数")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--D", type=_rational, required=True)
    p.add_argument("--Omega", type=_rational, required=True)
    p.add_argument("--sigma", type=_rational)
    p = sub.add_parser("bp-demo", help="随机折线上的路径分割")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--segments", type=int, default=4)
    p = sub.add_parser("gallery", help="核对实例库的期望值")
    group = p.add_mutually_exclusive_group()
    group.add_argument("--all", action="store_true", help="全部实例（默认）")
    group.add_argument("--name", help="单个实例")
    p = sub.add_parser("random", help="生成随机模型")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--n", type=int, default=2)
    return parser


def main(argv=None) -> int:
    parser = make_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code else 0

    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    return run_cli(args)


if __name__ == "__main__":
    sys.exit(main())
