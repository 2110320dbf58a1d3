"""Minimal SVG line plot: mean regret curves with shaded confidence bands."""
from __future__ import annotations

import math
from html import escape

import numpy as np

from .runner import AggregateResult

COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#17becf"]
WIDTH, HEIGHT = 720, 440
LEFT, RIGHT, TOP, BOTTOM = 70, 190, 30, 50
MAX_POINTS = 400


def _fmt(x: float) -> str:
    return f"{x:.1f}"


def render_svg(result: AggregateResult, title: str = "", log_y: bool = False) -> str:
    T = next(iter(result.cumulative.values())).shape[1]
    step = max(1, T // MAX_POINTS)
    idx = np.unique(np.r_[np.arange(0, T, step), T - 1])
    rounds = idx + 1
    curves = {}
    for label in result.labels:
        m = result.mean(label)[idx]
        h = result.ci_halfwidth(label)[idx]
        curves[label] = (m, m - h, m + h)
    hi = max(float(c[2].max()) for c in curves.values())
    floor = 1.0
    if log_y:
        y_lo, y_hi = math.log10(floor), math.log10(max(hi, 10.0))
        ymap = lambda v: math.log10(max(v, floor))
    else:
        y_lo, y_hi = 0.0, max(hi, 1e-9) * 1.05
        ymap = lambda v: v
    pw, ph = WIDTH - LEFT - RIGHT, HEIGHT - TOP - BOTTOM

    def px(t):
        return LEFT + pw * (t - 1) / max(1, T - 1)

    def py(v):
        return TOP + ph * (1 - (ymap(v) - y_lo) / (y_hi - y_lo))

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" font-family="sans-serif" font-size="11">',
           f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
           f'<text x="{LEFT}" y="18" font-size="13">{escape(title)}</text>',
           f'<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>']
    for k in range(6):
        t = 1 + (T - 1) * k / 5
        out.append(f'<text x="{_fmt(px(t))}" y="{HEIGHT - BOTTOM + 16}" text-anchor="middle">{int(round(t))}</text>')
    if log_y:
        ticks = [10 ** e for e in range(int(y_lo), int(math.ceil(y_hi)) + 1)]
    else:
        ticks = [y_hi / 1.05 * k / 5 for k in range(6)]
    for v in ticks:
        y = py(v)
        if TOP - 1 <= y <= TOP + ph + 1:
            out.append(f'<line x1="{LEFT - 4}" x2="{LEFT}" y1="{_fmt(y)}" y2="{_fmt(y)}" stroke="black"/>')
            out.append(f'<text x="{LEFT - 6}" y="{_fmt(y + 4)}" text-anchor="end">{v:.4g}</text>')
    out.append(f'<text x="{LEFT + pw / 2}" y="{HEIGHT - 12}" text-anchor="middle">round</text>')
    out.append(f'<text x="16" y="{TOP + ph / 2}" transform="rotate(-90 16 {TOP + ph / 2})" text-anchor="middle">'
               f'cumulative regret{" (log)" if log_y else ""}</text>')
    for i, label in enumerate(result.labels):
        color = COLORS[i % len(COLORS)]
        m, lo, up = curves[label]
        upper = " ".join(f"{_fmt(px(t))},{_fmt(py(v))}" for t, v in zip(rounds, up))
        lower = " ".join(f"{_fmt(px(t))},{_fmt(py(v))}" for t, v in zip(rounds[::-1], lo[::-1]))
        out.append(f'<polygon points="{upper} {lower}" fill="{color}" fill-opacity="0.2" stroke="none"/>')
        line = " ".join(f"{_fmt(px(t))},{_fmt(py(v))}" for t, v in zip(rounds, m))
        out.append(f'<polyline points="{line}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        ly = TOP + 14 + 16 * i
        out.append(f'<line x1="{WIDTH - RIGHT + 10}" x2="{WIDTH - RIGHT + 30}" y1="{ly - 4}" y2="{ly - 4}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{WIDTH - RIGHT + 34}" y="{ly}">{escape(label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def write_svg(result: AggregateResult, path, title: str = "", log_y: bool = False) -> None:
    with open(path, "w") as f:
        f.write(render_svg(result, title, log_y))
