"""Minimal deterministic SVG line plots.

Fixed canvas, axes with tick labels, one polyline per (trace, column)
series and a legend. Axis ranges are the data min/max padded by 5% of the
span on each side. Output depends only on the inputs, so identical inputs
give byte-identical files.
"""

from __future__ import annotations

from pathlib import Path
from typing import NamedTuple, Sequence
from xml.sax.saxutils import escape

import numpy as np

from .errors import ArgumentError

WIDTH, HEIGHT = 800, 500
MARGIN_LEFT, MARGIN_RIGHT, MARGIN_TOP, MARGIN_BOTTOM = 80, 20, 20, 50
PAD_FRACTION = 0.05
N_TICKS = 5
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f")


class Series(NamedTuple):
    label: str
    x: np.ndarray
    y: np.ndarray


def padded_range(values: np.ndarray) -> tuple[float, float]:
    lo, hi = float(np.min(values)), float(np.max(values))
    span = hi - lo
    if span == 0.0:
        span = abs(lo) if lo != 0.0 else 1.0
    return lo - PAD_FRACTION * span, hi + PAD_FRACTION * span


def _num(v: float) -> str:
    return f"{v:.2f}"


def _tick(v: float) -> str:
    return f"{v:.4g}"


def render_svg(series: Sequence[Series], x_label: str = "t", y_label: str = "") -> str:
    if not series:
        raise ArgumentError("nothing to plot")
    for s in series:
        if len(s.x) == 0:
            raise ArgumentError(f"series {s.label!r} is empty")
    xs = np.concatenate([s.x for s in series])
    ys = np.concatenate([s.y for s in series])
    if not (np.all(np.isfinite(xs)) and np.all(np.isfinite(ys))):
        raise ArgumentError("plot data contains non-finite values")
    x0, x1 = padded_range(xs)
    y0, y1 = padded_range(ys)
    pw = WIDTH - MARGIN_LEFT - MARGIN_RIGHT
    ph = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM

    def px(x):
        return MARGIN_LEFT + (np.asarray(x) - x0) / (x1 - x0) * pw

    def py(y):
        return MARGIN_TOP + (y1 - np.asarray(y)) / (y1 - y0) * ph

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<rect x="{MARGIN_LEFT}" y="{MARGIN_TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
    ]
    for v in np.linspace(x0, x1, N_TICKS):
        X = _num(px(v))
        out.append(f'<line x1="{X}" y1="{MARGIN_TOP + ph}" x2="{X}" y2="{MARGIN_TOP + ph + 5}" stroke="black"/>')
        out.append(
            f'<text x="{X}" y="{MARGIN_TOP + ph + 18}" font-size="11" text-anchor="middle">{_tick(v)}</text>'
        )
    for v in np.linspace(y0, y1, N_TICKS):
        Y = _num(py(v))
        out.append(f'<line x1="{MARGIN_LEFT - 5}" y1="{Y}" x2="{MARGIN_LEFT}" y2="{Y}" stroke="black"/>')
        out.append(
            f'<text x="{MARGIN_LEFT - 8}" y="{Y}" font-size="11" text-anchor="end" '
            f'dominant-baseline="middle">{_tick(v)}</text>'
        )
    out.append(
        f'<text x="{MARGIN_LEFT + pw / 2:.2f}" y="{HEIGHT - 10}" font-size="13" '
        f'text-anchor="middle">{escape(x_label)}</text>'
    )
    if y_label:
        out.append(
            f'<text x="15" y="{MARGIN_TOP + ph / 2:.2f}" font-size="13" text-anchor="middle" '
            f'transform="rotate(-90 15 {MARGIN_TOP + ph / 2:.2f})">{escape(y_label)}</text>'
        )
    for i, s in enumerate(series):
        color = PALETTE[i % len(PALETTE)]
        pts = " ".join(f"{_num(a)},{_num(b)}" for a, b in zip(px(s.x), py(s.y)))
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{pts}"/>')
    lx, ly = MARGIN_LEFT + pw - 180, MARGIN_TOP + 15
    out.append('<g class="legend">')
    for i, s in enumerate(series):
        color = PALETTE[i % len(PALETTE)]
        y = ly + 16 * i
        out.append(f'<line x1="{lx}" y1="{y}" x2="{lx + 20}" y2="{y}" stroke="{color}" stroke-width="2"/>')
        out.append(
            f'<text x="{lx + 26}" y="{y}" font-size="11" dominant-baseline="middle">{escape(s.label)}</text>'
        )
    out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"


def plot_traces(
    traces: Sequence[tuple[str, dict]],
    columns: Sequence[str],
    out: Path | str,
) -> None:
    """Plot ``columns`` of each (label, column-dict) trace against t.

    Raises before touching ``out`` when a column is unknown or a trace is
    empty.
    """
    if not columns:
        raise ArgumentError("no columns requested")
    series = []
    for label, cols in traces:
        unknown = [c for c in columns if c not in cols or c == "t"]
        if unknown:
            available = ", ".join(c for c in cols if c != "t")
            raise ArgumentError(f"unknown column(s) {', '.join(unknown)} in {label}; available: {available}")
        if len(cols["t"]) == 0:
            raise ArgumentError(f"trace {label} is empty")
        for c in columns:
            name = label if len(columns) == 1 else f"{label}:{c}"
            series.append(Series(name, np.asarray(cols["t"]), np.asarray(cols[c])))
    y_label = columns[0] if len(columns) == 1 else ""
    text = render_svg(series, "t", y_label)
    Path(out).write_text(text)
