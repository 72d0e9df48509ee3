"""Tiny self-contained SVG line charts, enough for the audit figures.

Deliberately minimal: polylines over numeric series with axes, 1-2-5 ticks
and a legend.  Keeps the package free of plotting dependencies and keeps the
output byte-deterministic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#8c564b", "#e377c2")


@dataclass
class Series:
    x: np.ndarray
    y: np.ndarray
    label: str = ""
    color: str | None = None
    dashed: bool = False


def _ticks(lo: float, hi: float, target: int = 5):
    if not math.isfinite(lo) or not math.isfinite(hi):
        lo, hi = 0.0, 1.0
    if hi <= lo:
        hi = lo + 1.0
    span = hi - lo
    step = 10.0 ** math.floor(math.log10(span / target))
    for mult in (1.0, 2.0, 5.0, 10.0):
        if span / (step * mult) <= target + 1:
            step *= mult
            break
    start = math.ceil(lo / step) * step
    out = []
    v = start
    while v <= hi + step * 1e-9:
        out.append(0.0 if abs(v) < step * 1e-9 else v)
        v += step
    return out


def _fmt(v: float) -> str:
    return "%g" % (round(v, 10),)


def render_line_chart(series, title: str = "", xlabel: str = "", ylabel: str = "",
                      width: int = 640, height: int = 420, path=None) -> str:
    """Render series to an SVG string; optionally also write it to ``path``."""
    series = list(series)
    xs = np.concatenate([np.asarray(s.x, dtype=float).ravel() for s in series]) \
        if series else np.array([0.0, 1.0])
    ys = np.concatenate([np.asarray(s.y, dtype=float).ravel() for s in series]) \
        if series else np.array([0.0, 1.0])
    xs = xs[np.isfinite(xs)]
    ys = ys[np.isfinite(ys)]
    x_lo, x_hi = (xs.min(), xs.max()) if xs.size else (0.0, 1.0)
    y_lo, y_hi = (ys.min(), ys.max()) if ys.size else (0.0, 1.0)
    if x_hi <= x_lo:
        x_hi = x_lo + 1.0
    if y_hi <= y_lo:
        y_hi = y_lo + 1.0
    pad_y = 0.05 * (y_hi - y_lo)
    y_lo, y_hi = y_lo - pad_y, y_hi + pad_y
    m_left, m_right, m_top, m_bottom = 62, 16, 34, 46

    def sx(v):
        return m_left + (v - x_lo) / (x_hi - x_lo) * (width - m_left - m_right)

    def sy(v):
        return height - m_bottom - (v - y_lo) / (y_hi - y_lo) \
            * (height - m_top - m_bottom)

    parts = [
        '<svg xmlns="http://www.w3.org/2000/svg" width="%d" height="%d" '
        'viewBox="0 0 %d %d">' % (width, height, width, height),
        '<rect width="%d" height="%d" fill="white"/>' % (width, height),
    ]
    if title:
        parts.append('<text x="%g" y="20" font-size="14" font-family="sans-serif" '
                     'text-anchor="middle">%s</text>'
                     % ((m_left + width - m_right) / 2.0, title))
    axis_style = 'stroke="black" stroke-width="1"'
    x0, y0 = sx(x_lo), sy(y_lo)
    parts.append('<line x1="%g" y1="%g" x2="%g" y2="%g" %s/>'
                 % (x0, y0, sx(x_hi), y0, axis_style))
    parts.append('<line x1="%g" y1="%g" x2="%g" y2="%g" %s/>'
                 % (x0, y0, x0, sy(y_hi), axis_style))
    for tv in _ticks(x_lo, x_hi):
        parts.append('<line x1="%g" y1="%g" x2="%g" y2="%g" %s/>'
                     % (sx(tv), y0, sx(tv), y0 + 5, axis_style))
        parts.append('<text x="%g" y="%g" font-size="11" font-family="sans-serif" '
                     'text-anchor="middle">%s</text>'
                     % (sx(tv), y0 + 18, _fmt(tv)))
    for tv in _ticks(y_lo, y_hi):
        parts.append('<line x1="%g" y1="%g" x2="%g" y2="%g" %s/>'
                     % (x0 - 5, sy(tv), x0, sy(tv), axis_style))
        parts.append('<text x="%g" y="%g" font-size="11" font-family="sans-serif" '
                     'text-anchor="end">%s</text>'
                     % (x0 - 8, sy(tv) + 4, _fmt(tv)))
    if xlabel:
        parts.append('<text x="%g" y="%g" font-size="12" font-family="sans-serif" '
                     'text-anchor="middle">%s</text>'
                     % ((m_left + width - m_right) / 2.0, height - 10, xlabel))
    if ylabel:
        parts.append('<text x="14" y="%g" font-size="12" font-family="sans-serif" '
                     'text-anchor="middle" transform="rotate(-90 14 %g)">%s</text>'
                     % ((m_top + height - m_bottom) / 2.0,
                        (m_top + height - m_bottom) / 2.0, ylabel))
    colors = [s.color or PALETTE[i % len(PALETTE)] for i, s in enumerate(series)]
    for s, color in zip(series, colors):
        pts = " ".join("%g,%g" % (sx(px), sy(py))
                       for px, py in zip(np.asarray(s.x, dtype=float).ravel(),
                                         np.asarray(s.y, dtype=float).ravel())
                       if math.isfinite(px) and math.isfinite(py))
        dash = ' stroke-dasharray="6 4"' if s.dashed else ""
        parts.append('<polyline points="%s" fill="none" stroke="%s" '
                     'stroke-width="1.6"%s/>' % (pts, color, dash))
    labeled = [(s, c) for s, c in zip(series, colors) if s.label]
    if labeled:
        lx, ly = width - m_right - 150, m_top + 4
        parts.append('<rect x="%g" y="%g" width="146" height="%d" fill="white" '
                     'stroke="#999"/>' % (lx, ly, 16 * len(labeled) + 8))
        for i, (s, color) in enumerate(labeled):
            yy = ly + 14 + 16 * i
            dash = ' stroke-dasharray="6 4"' if s.dashed else ""
            parts.append('<line x1="%g" y1="%g" x2="%g" y2="%g" stroke="%s" '
                         'stroke-width="1.6"%s/>' % (lx + 6, yy - 4, lx + 30,
                                                     yy - 4, color, dash))
            parts.append('<text x="%g" y="%g" font-size="11" '
                         'font-family="sans-serif">%s</text>'
                         % (lx + 36, yy, s.label))
    parts.append("</svg>")
    svg = "\n".join(parts)
    if path is not None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(svg)
    return svg
