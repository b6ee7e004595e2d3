"""Minimal SVG renderings of result tables: heatmaps, curves, radar.

Hand-rolled on purpose: figures are data-faithful displays of CSV-sized
results and do not justify a plotting dependency. All output is
deterministic for identical inputs.
"""

from __future__ import annotations

from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

__all__ = ["heatmap_svg", "line_chart_svg", "radar_svg"]

# dark -> mid -> bright ramp (roughly viridis endpoints)
_RAMP = [(68, 1, 84), (33, 145, 140), (253, 231, 37)]


def _color(value: float) -> str:
    v = min(max(float(value), 0.0), 1.0)
    if v < 0.5:
        a, b, t = _RAMP[0], _RAMP[1], v / 0.5
    else:
        a, b, t = _RAMP[1], _RAMP[2], (v - 0.5) / 0.5
    rgb = [round(x + (y - x) * t) for x, y in zip(a, b)]
    return f"rgb({rgb[0]},{rgb[1]},{rgb[2]})"


def _text(x, y, s, size=11, anchor="middle", rotate=None) -> str:
    transform = f' transform="rotate({rotate} {x:.1f} {y:.1f})"' if rotate else ""
    return (
        f'<text x="{x:.1f}" y="{y:.1f}" font-size="{size}" font-family="sans-serif"'
        f' text-anchor="{anchor}"{transform}>{s}</text>'
    )


def heatmap_svg(
    matrix: np.ndarray,
    labels: Sequence[str],
    path,
    title: str = "",
) -> None:
    """Write an n x n heatmap; bright cells are high values."""
    matrix = np.asarray(matrix, dtype=float)
    n = matrix.shape[0]
    cell = max(14, 360 // max(n, 1))
    margin_left, margin_top = 70, 50
    width = margin_left + n * cell + 30
    height = margin_top + n * cell + 70
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}"'
        f' viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
    ]
    if title:
        parts.append(_text(margin_left + n * cell / 2, 24, title, size=14))
    for i in range(n):
        for j in range(n):
            x = margin_left + j * cell
            y = margin_top + i * cell
            parts.append(
                f'<rect x="{x}" y="{y}" width="{cell}" height="{cell}"'
                f' fill="{_color(matrix[i, j])}">'
                f"<title>{labels[i]} vs {labels[j]}: {matrix[i, j]:.3f}</title></rect>"
            )
    for i, label in enumerate(labels):
        y = margin_top + i * cell + cell / 2 + 4
        parts.append(_text(margin_left - 6, y, label, size=9, anchor="end"))
        x = margin_left + i * cell + cell / 2
        parts.append(
            _text(x, margin_top + n * cell + 12, label, size=9, rotate=45)
        )
    parts.append("</svg>")
    Path(path).write_text("\n".join(parts) + "\n", encoding="utf-8")


def line_chart_svg(
    series: Mapping[str, tuple[Sequence[float], Sequence[float]]],
    path,
    title: str = "",
    xlabel: str = "",
    ylabel: str = "",
) -> None:
    """Write a line chart for named (x, y) series with a legend."""
    width, height = 520, 340
    left, right, top, bottom = 70, 150, 50, 50
    plot_w, plot_h = width - left - right, height - top - bottom

    xs = np.concatenate([np.asarray(x, float) for x, _ in series.values()])
    ys = np.concatenate([np.asarray(y, float) for _, y in series.values()])
    x_lo, x_hi = float(xs.min()), float(xs.max())
    y_lo, y_hi = min(0.0, float(ys.min())), float(ys.max())
    if x_hi == x_lo:
        x_hi = x_lo + 1.0
    if y_hi == y_lo:
        y_hi = y_lo + 1.0

    def px(x):
        return left + (x - x_lo) / (x_hi - x_lo) * plot_w

    def py(y):
        return top + plot_h - (y - y_lo) / (y_hi - y_lo) * plot_h

    palette = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"]
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}"'
        f' viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<rect x="{left}" y="{top}" width="{plot_w}" height="{plot_h}"'
        ' fill="none" stroke="black"/>',
    ]
    if title:
        parts.append(_text(left + plot_w / 2, 24, title, size=14))
    for frac in (0.0, 0.25, 0.5, 0.75, 1.0):
        xv = x_lo + frac * (x_hi - x_lo)
        yv = y_lo + frac * (y_hi - y_lo)
        parts.append(_text(px(xv), top + plot_h + 16, f"{xv:g}", size=9))
        parts.append(_text(left - 6, py(yv) + 3, f"{yv:.3g}", size=9, anchor="end"))
    if xlabel:
        parts.append(_text(left + plot_w / 2, height - 10, xlabel, size=11))
    if ylabel:
        parts.append(_text(16, top + plot_h / 2, ylabel, size=11, rotate=-90))

    for k, (name, (x, y)) in enumerate(series.items()):
        color = palette[k % len(palette)]
        points = " ".join(f"{px(a):.1f},{py(b):.1f}" for a, b in zip(x, y))
        parts.append(
            f'<polyline points="{points}" fill="none" stroke="{color}" stroke-width="1.5"/>'
        )
        for a, b in zip(x, y):
            parts.append(f'<circle cx="{px(a):.1f}" cy="{py(b):.1f}" r="2.5" fill="{color}"/>')
        ly = top + 14 + 16 * k
        lx = left + plot_w + 12
        parts.append(f'<line x1="{lx}" y1="{ly - 4}" x2="{lx + 18}" y2="{ly - 4}" stroke="{color}" stroke-width="2"/>')
        parts.append(_text(lx + 22, ly, name, size=10, anchor="start"))
    parts.append("</svg>")
    Path(path).write_text("\n".join(parts) + "\n", encoding="utf-8")


def radar_svg(
    categories: Sequence[str],
    series: Mapping[str, Sequence[float]],
    path,
    title: str = "",
) -> None:
    """Write a radar chart of per-category rates in [0, 1]."""
    width, height = 460, 400
    cx, cy, radius = 200, 210, 130
    n = len(categories)
    angles = [2 * np.pi * k / n - np.pi / 2 for k in range(n)]

    def point(angle, r):
        return cx + radius * r * np.cos(angle), cy + radius * r * np.sin(angle)

    palette = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"]
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}"'
        f' viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
    ]
    if title:
        parts.append(_text(cx, 24, title, size=14))
    for ring in (0.25, 0.5, 0.75, 1.0):
        ring_pts = " ".join(f"{x:.1f},{y:.1f}" for x, y in (point(a, ring) for a in angles))
        parts.append(f'<polygon points="{ring_pts}" fill="none" stroke="#cccccc"/>')
    for angle, label in zip(angles, categories):
        x, y = point(angle, 1.12)
        parts.append(f'<line x1="{cx}" y1="{cy}" x2="{point(angle, 1.0)[0]:.1f}" y2="{point(angle, 1.0)[1]:.1f}" stroke="#999999"/>')
        parts.append(_text(x, y, label, size=10))
    for k, (name, values) in enumerate(series.items()):
        color = palette[k % len(palette)]
        pts = " ".join(
            f"{x:.1f},{y:.1f}"
            for x, y in (point(a, max(0.0, min(1.0, v))) for a, v in zip(angles, values))
        )
        parts.append(
            f'<polygon points="{pts}" fill="{color}" fill-opacity="0.15" stroke="{color}" stroke-width="1.5"/>'
        )
        ly = 40 + 16 * k
        lx = width - 120
        parts.append(f'<line x1="{lx}" y1="{ly - 4}" x2="{lx + 18}" y2="{ly - 4}" stroke="{color}" stroke-width="2"/>')
        parts.append(_text(lx + 22, ly, name, size=10, anchor="start"))
    parts.append("</svg>")
    Path(path).write_text("\n".join(parts) + "\n", encoding="utf-8")
