"""Standalone SVG loss-vs-loss scatter plots, written as plain XML text."""

from __future__ import annotations

import math
from pathlib import Path
from xml.sax.saxutils import escape

from ..errors import OutputError, ValidationError
from .sweep import LOSS_COLUMNS, SweepResult, loss_value

__all__ = ["emit_svg_scatter", "render_svg_scatter"]

WIDTH, HEIGHT = 640, 480
LEFT, RIGHT, TOP, BOTTOM = 80, 170, 30, 60
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
           "#bcbd22", "#17becf")


def _axis(values, log):
    """Axis range and the transformed coordinate of each value.

    For log axes nonpositive values are clamped to the smallest positive one.
    Returns ``(lo, hi, coords, clamped_flags)`` in transformed units.
    """
    if log:
        pos = [v for v in values if v > 0]
        floor = min(pos) if pos else 1.0
        coords = [math.log10(max(v, floor)) if v > 0 else math.log10(floor) for v in values]
        clamped = [not v > 0 for v in values]
    else:
        coords, clamped = list(values), [False] * len(values)
    lo, hi = min(coords), max(coords)
    if hi - lo < 1e-12 * max(1.0, abs(lo)):
        lo, hi = lo - 0.5, hi + 0.5
    pad = 0.05 * (hi - lo)
    return lo - pad, hi + pad, coords, clamped


def _ticks(lo, hi, log, count=5):
    out = []
    for i in range(count):
        t = lo + (hi - lo) * i / (count - 1)
        out.append((t, format(10.0**t if log else t, ".3g")))
    return out


def render_svg_scatter(result: SweepResult, loss_x: str, loss_y: str, log_axes: bool = False) -> str:
    pts = []
    for row in result.rows:
        x, y = loss_value(row, loss_x), loss_value(row, loss_y)
        if math.isfinite(x) and math.isfinite(y):
            pts.append((row.method, x, y))
    if not pts:
        raise ValidationError(f"no row has finite values of both {loss_x!r} and {loss_y!r}")
    methods = list(dict.fromkeys(m for m, _, _ in pts))
    color = {m: PALETTE[i % len(PALETTE)] for i, m in enumerate(methods)}
    x0, x1, xs, cx = _axis([p[1] for p in pts], log_axes)
    y0, y1, ys, cy = _axis([p[2] for p in pts], log_axes)
    pw, ph = WIDTH - LEFT - RIGHT, HEIGHT - TOP - BOTTOM
    sx = lambda v: LEFT + (v - x0) / (x1 - x0) * pw
    sy = lambda v: TOP + ph - (v - y0) / (y1 - y0) * ph
    name_x = LOSS_COLUMNS.get(loss_x[5:] if loss_x.startswith("loss_") else loss_x, loss_x)
    name_y = LOSS_COLUMNS.get(loss_y[5:] if loss_y.startswith("loss_") else loss_y, loss_y)
    scale = " (log scale)" if log_axes else ""

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<rect class="frame" x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
    ]
    for t, label in _ticks(x0, x1, log_axes):
        X = sx(t)
        out.append(f'<line x1="{X:.2f}" y1="{TOP + ph}" x2="{X:.2f}" y2="{TOP + ph + 5}" stroke="black"/>')
        out.append(f'<text x="{X:.2f}" y="{TOP + ph + 18}" text-anchor="middle">{escape(label)}</text>')
    for t, label in _ticks(y0, y1, log_axes):
        Y = sy(t)
        out.append(f'<line x1="{LEFT - 5}" y1="{Y:.2f}" x2="{LEFT}" y2="{Y:.2f}" stroke="black"/>')
        out.append(f'<text x="{LEFT - 8}" y="{Y + 4:.2f}" text-anchor="end">{escape(label)}</text>')
    out.append(f'<text class="xlabel" x="{LEFT + pw / 2:.2f}" y="{HEIGHT - 15}" text-anchor="middle">'
               f'{escape(name_x + scale)}</text>')
    out.append(f'<text class="ylabel" x="18" y="{TOP + ph / 2:.2f}" text-anchor="middle" '
               f'transform="rotate(-90 18 {TOP + ph / 2:.2f})">{escape(name_y + scale)}</text>')

    n_clamped = 0
    for (method, x, y), px, py, kx, ky in zip(pts, xs, ys, cx, cy):
        extra = ""
        if kx or ky:
            n_clamped += 1
            extra = ' data-clamped="true"'
        out.append(f'<circle class="point" cx="{sx(px):.2f}" cy="{sy(py):.2f}" r="3.5" '
                   f'fill="{color[method]}" fill-opacity="0.8"{extra}>'
                   f'<title>{escape(method)}: ({x:.6g}, {y:.6g})</title></circle>')

    lx = LEFT + pw + 15
    out.append('<g class="legend">')
    for i, m in enumerate(methods):
        ly = TOP + 10 + 18 * i
        out.append(f'<rect class="legend-entry" x="{lx}" y="{ly - 8}" width="10" height="10" fill="{color[m]}"/>')
        out.append(f'<text x="{lx + 15}" y="{ly + 1}">{escape(m)}</text>')
    out.append("</g>")
    if n_clamped:
        out.append(f'<text class="clamp-note" x="{LEFT}" y="{TOP - 10}" fill="#555">'
                   f'{n_clamped} point(s) with nonpositive loss clamped to the axis minimum</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit_svg_scatter(result: SweepResult, loss_x: str, loss_y: str, path, log_axes: bool = False) -> None:
    text = render_svg_scatter(result, loss_x, loss_y, log_axes)
    path = Path(path)
    try:
        path.write_text(text)
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc.strerror or exc}") from exc
