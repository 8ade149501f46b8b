"""
PeriodicMetrics - SVG 图
二维稳定单位球、偏差-半径曲线、环带计数直方图
"""

import functools
import io
import math
import threading
from typing import List, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .errors import ModelError  # noqa: E402
from .stable_geometry import StableBall  # noqa: E402

# 固定 SVG 内部 id，保证同一输入输出相同
plt.rcParams["svg.hashsalt"] = "periodic-metrics"

# pyplot 全局状态：同一时刻只允许一个线程作图
_PLOT_LOCK = threading.Lock()


def _serialized(func):
    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        with _PLOT_LOCK:
            return func(*args, **kwargs)
    return wrapper


def _to_svg(fig, timestamp: bool) -> str:
    buffer = io.StringIO()
    metadata = {} if timestamp else {"Date": None}
    fig.savefig(buffer, format="svg", metadata=metadata)
    plt.close(fig)
    return buffer.getvalue()


@_serialized
def stable_ball_svg(ball: StableBall, title: str = "", timestamp: bool = False) -> str:
    """n = 2 的稳定单位球多边形"""
    if ball.rank != 2:
        raise ModelError(f"只绘制二维单位球 (n = {ball.rank})")
    points = [(float(x), float(y)) for x, y in ball.vertices]
    points.sort(key=lambda p: math.atan2(p[1], p[0]))
    xs = [p[0] for p in points] + [points[0][0]]
    ys = [p[1] for p in points] + [points[0][1]]

    fig, ax = plt.subplots(figsize=(5, 5))
    ax.fill(xs, ys, alpha=0.25, color="tab:blue")
    ax.plot(xs, ys, "o-", color="tab:blue", lw=1.5, ms=4)
    ax.axhline(0, color="grey", lw=0.5)
    ax.axvline(0, color="grey", lw=0.5)
    ax.set_aspect("equal")
    ax.set_title(title or "stable unit ball")
    return _to_svg(fig, timestamp)


@_serialized
def deviation_svg(radii: Sequence, values: Sequence, title: str = "", timestamp: bool = False) -> str:
    """ĉ(R) 随 R 的变化"""
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot([float(r) for r in radii], [float(v) for v in values], "s-", color="tab:red")
    ax.set_xlabel("R")
    ax.set_ylabel("max |d - stable norm|")
    ax.grid(alpha=0.3)
    ax.set_title(title or "QBD deviation")
    return _to_svg(fig, timestamp)


@_serialized
def annuli_svg(counts: List[int], lower: List[float], upper: List[float],
               title: str = "", timestamp: bool = False) -> str:
    """环带计数直方图，叠加上下界"""
    ks = list(range(len(counts)))
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.bar(ks, counts, color="tab:green", alpha=0.6, label="v(kΔ, (k+1)Δ)")
    if lower:
        ax.plot(ks[1:], lower, "v--", color="black", lw=1, label="A (kΔ)^(n-1)")
    if upper:
        ax.plot(ks[1:], upper, "^--", color="grey", lw=1, label="B (kΔ)^(n-1)")
    ax.set_xlabel("k")
    ax.legend()
    ax.set_title(title or "annuli counts")
    return _to_svg(fig, timestamp)
