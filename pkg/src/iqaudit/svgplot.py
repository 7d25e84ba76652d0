"""Dependency-free SVG charts with deterministic output.

Scatter plots draw exactly one <circle> per data point (legend swatches
are rectangles), so tests can count points structurally.
"""
from __future__ import annotations

from .errors import InputError

__all__ = ["scatter_svg", "line_svg"]

WIDTH, HEIGHT = 640, 480
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 64, 168, 40, 56
PALETTE = (
    "#1f77b4",
    "#ff7f0e",
    "#2ca02c",
    "#d62728",
    "#9467bd",
    "#8c564b",
    "#e377c2",
    "#7f7f7f",
    "#bcbd22",
    "#17becf",
)
_FONT = 'font-family="Menlo, Consolas, monospace" font-size="12"'


def _span(values):
    lo, hi = min(values), max(values)
    if lo == hi:
        lo, hi = lo - 0.5, hi + 0.5
    pad = 0.05 * (hi - lo)
    return lo - pad, hi + pad


def _scale(v, lo, hi, out_lo, out_hi):
    return out_lo + (v - lo) / (hi - lo) * (out_hi - out_lo)


def _axes(xlo, xhi, ylo, yhi, x_label, y_label, title):
    x0, x1 = MARGIN_L, WIDTH - MARGIN_R
    y0, y1 = HEIGHT - MARGIN_B, MARGIN_T
    parts = [
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{(x0 + x1) / 2:.2f}" y="{MARGIN_T - 16}" text-anchor="middle" {_FONT} font-size="14">{title}</text>',
        f'<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black"/>',
        f'<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="black"/>',
    ]
    for i in range(5):
        fx = xlo + (xhi - xlo) * i / 4
        px = _scale(fx, xlo, xhi, x0, x1)
        parts.append(f'<line x1="{px:.2f}" y1="{y0}" x2="{px:.2f}" y2="{y0 + 4}" stroke="black"/>')
        parts.append(f'<text x="{px:.2f}" y="{y0 + 18}" text-anchor="middle" {_FONT}>{fx:.3g}</text>')
        fy = ylo + (yhi - ylo) * i / 4
        py = _scale(fy, ylo, yhi, y0, y1)
        parts.append(f'<line x1="{x0 - 4}" y1="{py:.2f}" x2="{x0}" y2="{py:.2f}" stroke="black"/>')
        parts.append(f'<text x="{x0 - 8}" y="{py + 4:.2f}" text-anchor="end" {_FONT}>{fy:.3g}</text>')
    parts.append(
        f'<text x="{(x0 + x1) / 2:.2f}" y="{HEIGHT - 12}" text-anchor="middle" {_FONT}>{x_label}</text>'
    )
    parts.append(
        f'<text x="16" y="{(y0 + y1) / 2:.2f}" text-anchor="middle" {_FONT} '
        f'transform="rotate(-90 16 {(y0 + y1) / 2:.2f})">{y_label}</text>'
    )
    return parts


def scatter_svg(points, x_label: str, y_label: str, title: str = "") -> str:
    """Scatter of (x, y, series) triples; one circle per point.

    Points are colored by series (palette cycles through the sorted series
    names); the legend uses rect swatches.
    """
    pts = list(points)
    if not pts:
        raise InputError("no points to plot")
    xs = [p[0] for p in pts]
    ys = [p[1] for p in pts]
    series = sorted({p[2] for p in pts})
    color = {s: PALETTE[i % len(PALETTE)] for i, s in enumerate(series)}
    xlo, xhi = _span(xs)
    ylo, yhi = _span(ys)
    x0, x1 = MARGIN_L, WIDTH - MARGIN_R
    y0, y1 = HEIGHT - MARGIN_B, MARGIN_T
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}">']
    parts += _axes(xlo, xhi, ylo, yhi, x_label, y_label, title)
    for x, y, s in pts:
        px = _scale(x, xlo, xhi, x0, x1)
        py = _scale(y, ylo, yhi, y0, y1)
        parts.append(f'<circle cx="{px:.2f}" cy="{py:.2f}" r="4" fill="{color[s]}" fill-opacity="0.8"/>')
    for i, s in enumerate(series):
        ly = MARGIN_T + 14 * i
        parts.append(f'<rect x="{x1 + 12}" y="{ly - 9}" width="10" height="10" fill="{color[s]}"/>')
        parts.append(f'<text x="{x1 + 26}" y="{ly}" {_FONT}>{s}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def line_svg(xs, ys, x_label: str, y_label: str, title: str = "") -> str:
    """Single polyline with circle markers, sorted by x."""
    pairs = sorted(zip(xs, ys))
    if not pairs:
        raise InputError("no points to plot")
    xlo, xhi = _span([p[0] for p in pairs])
    ylo, yhi = _span([p[1] for p in pairs])
    x0, x1 = MARGIN_L, WIDTH - MARGIN_R
    y0, y1 = HEIGHT - MARGIN_B, MARGIN_T
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}">']
    parts += _axes(xlo, xhi, ylo, yhi, x_label, y_label, title)
    coords = [
        (_scale(x, xlo, xhi, x0, x1), _scale(y, ylo, yhi, y0, y1)) for x, y in pairs
    ]
    path = " ".join(f"{px:.2f},{py:.2f}" for px, py in coords)
    parts.append(f'<polyline points="{path}" fill="none" stroke="{PALETTE[0]}" stroke-width="2"/>')
    for px, py in coords:
        parts.append(f'<circle cx="{px:.2f}" cy="{py:.2f}" r="3" fill="{PALETTE[0]}"/>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
