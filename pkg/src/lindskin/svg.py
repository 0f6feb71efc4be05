"""Minimal dependency-free SVG plotting for batch figures.

Output is byte-stable: coordinates are written with fixed precision and
element order follows the input order.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal, Mapping, Sequence
from xml.sax.saxutils import escape, quoteattr

import numpy as np

WIDTH, HEIGHT = 800, 600
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


@dataclass
class Series:
    label: str
    x: Sequence[float]
    y: Sequence[float]
    style: Literal["points", "line"] = "points"
    color: str | None = None


@dataclass
class Arrow:
    """Arrow glyph anchored at ``(x, y)`` pointing along ``(dx, dy)``."""

    x: float
    y: float
    dx: float
    dy: float
    label: str = ""


@dataclass
class Panel:
    title: str
    series: list[Series]
    xlabel: str = ""
    ylabel: str = ""
    arrows: list[Arrow] = field(default_factory=list)


def nice_ticks(lo: float, hi: float, target: int = 5) -> list[float]:
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / target
    mag = 10 ** math.floor(math.log10(raw))
    step = next(m * mag for m in (1, 2, 2.5, 5, 10) if m * mag >= raw)
    start = math.ceil(lo / step - 1e-9)
    stop = math.floor(hi / step + 1e-9)
    return [round(i * step, 12) for i in range(start, stop + 1)]


def _f(v: float) -> str:
    return f"{v:.2f}"


def _tick_label(v: float) -> str:
    return f"{v:.6g}" if v != 0 else "0"


def _limits(values: np.ndarray) -> tuple[float, float]:
    lo, hi = float(values.min()), float(values.max())
    if hi - lo < 1e-12:
        pad = max(abs(lo) * 0.1, 0.5)
    else:
        pad = 0.06 * (hi - lo)
    return lo - pad, hi + pad


def _panel(out: list[str], panel: Panel, box: tuple[float, float, float, float]):
    x0, y0, w, h = box
    if not panel.series:
        raise ValueError(f"panel {panel.title!r} has no series")
    xs, ys = [], []
    for s in panel.series:
        x = np.asarray(s.x, dtype=float)
        y = np.asarray(s.y, dtype=float)
        if x.size == 0 or x.shape != y.shape:
            raise ValueError(f"series {s.label!r} is empty or has mismatched x/y")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise ValueError(f"series {s.label!r} has non-finite data")
        xs.append(x)
        ys.append(y)
    for a in panel.arrows:
        xs.append(np.array([a.x, a.x + a.dx]))
        ys.append(np.array([a.y, a.y + a.dy]))
    xlo, xhi = _limits(np.concatenate(xs))
    ylo, yhi = _limits(np.concatenate(ys))
    left, right, top, bottom = x0 + 58, x0 + w - 12, y0 + 28, y0 + h - 42

    def px(v):
        return left + (v - xlo) / (xhi - xlo) * (right - left)

    def py(v):
        return bottom - (v - ylo) / (yhi - ylo) * (bottom - top)

    out.append(f'<g class="panel" data-title={quoteattr(panel.title)}>')
    out.append(f'<text x="{_f((left + right) / 2)}" y="{_f(y0 + 18)}" text-anchor="middle" '
               f'font-size="13">{escape(panel.title)}</text>')
    out.append(f'<rect x="{_f(left)}" y="{_f(top)}" width="{_f(right - left)}" '
               f'height="{_f(bottom - top)}" fill="none" stroke="#000"/>')
    for v in nice_ticks(xlo, xhi):
        X = px(v)
        out.append(f'<line x1="{_f(X)}" y1="{_f(bottom)}" x2="{_f(X)}" y2="{_f(bottom + 4)}" stroke="#000"/>')
        out.append(f'<text x="{_f(X)}" y="{_f(bottom + 15)}" text-anchor="middle" '
                   f'font-size="10">{_tick_label(v)}</text>')
    for v in nice_ticks(ylo, yhi):
        Y = py(v)
        out.append(f'<line x1="{_f(left - 4)}" y1="{_f(Y)}" x2="{_f(left)}" y2="{_f(Y)}" stroke="#000"/>')
        out.append(f'<text x="{_f(left - 6)}" y="{_f(Y + 3)}" text-anchor="end" '
                   f'font-size="10">{_tick_label(v)}</text>')
    if panel.xlabel:
        out.append(f'<text x="{_f((left + right) / 2)}" y="{_f(y0 + h - 8)}" text-anchor="middle" '
                   f'font-size="11">{escape(panel.xlabel)}</text>')
    if panel.ylabel:
        cx, cy = x0 + 14, (top + bottom) / 2
        out.append(f'<text x="{_f(cx)}" y="{_f(cy)}" text-anchor="middle" font-size="11" '
                   f'transform="rotate(-90 {_f(cx)} {_f(cy)})">{escape(panel.ylabel)}</text>')

    for n, (s, x, y) in enumerate(zip(panel.series, xs, ys)):
        color = s.color or PALETTE[n % len(PALETTE)]
        out.append(f'<g class="series" data-label={quoteattr(s.label)}>')
        if s.style == "line":
            pts = " ".join(f"{_f(px(a))},{_f(py(b))}" for a, b in zip(x, y))
            out.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        else:
            for a, b in zip(x, y):
                out.append(f'<circle cx="{_f(px(a))}" cy="{_f(py(b))}" r="2.5" fill="{color}"/>')
        out.append("</g>")
        # legend glyphs are rects so circles map one-to-one onto data points
        ly = top + 12 + 14 * n
        out.append(f'<rect x="{_f(right - 110)}" y="{_f(ly - 7)}" width="8" height="8" fill="{color}"/>')
        out.append(f'<text x="{_f(right - 98)}" y="{_f(ly)}" font-size="10">{escape(s.label)}</text>')

    for a in panel.arrows:
        out.append(f'<g class="arrow"><line x1="{_f(px(a.x))}" y1="{_f(py(a.y))}" '
                   f'x2="{_f(px(a.x + a.dx))}" y2="{_f(py(a.y + a.dy))}" stroke="#000" '
                   f'stroke-width="1.5" marker-end="url(#arrowhead)"/>')
        if a.label:
            out.append(f'<text x="{_f(px(a.x) + 4)}" y="{_f(py(a.y) - 4)}" font-size="11">'
                       f'{escape(a.label)}</text>')
        out.append("</g>")
    out.append("</g>")


def emit_svg(panels: Sequence[Panel], title: str = "",
             metadata: Mapping[str, str] | None = None) -> str:
    """Render panels on a fixed 800x600 canvas, laid out on a grid of up to two columns."""
    if not panels:
        raise ValueError("nothing to plot")
    cols = 1 if len(panels) == 1 else 2
    rows = math.ceil(len(panels) / cols)
    top = 30 if title else 0
    cw, ch = WIDTH / cols, (HEIGHT - top) / rows
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}">',
    ]
    if metadata:
        out.append("<metadata>")
        for key in sorted(metadata):
            out.append(f"<entry key={quoteattr(str(key))}>{escape(str(metadata[key]))}</entry>")
        out.append("</metadata>")
    out.append('<defs><marker id="arrowhead" markerWidth="8" markerHeight="8" refX="7" refY="4" '
               'orient="auto"><path d="M0,0 L8,4 L0,8 z" fill="#000"/></marker></defs>')
    out.append(f'<rect width="{WIDTH}" height="{HEIGHT}" fill="#fff"/>')
    if title:
        out.append(f'<text x="{WIDTH / 2:.2f}" y="20" text-anchor="middle" font-size="15">{escape(title)}</text>')
    for n, p in enumerate(panels):
        r, c = divmod(n, cols)
        _panel(out, p, (c * cw, top + r * ch, cw, ch))
    out.append("</svg>")
    return "\n".join(out) + "\n"
