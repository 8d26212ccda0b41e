"""Dependency-free SVG rendering of eccentricity-error curves.

Each curve is drawn from its binned summary: a line through the per-bin mean
errors with a translucent band of +- one standard deviation, over a dashed
y = x reference line (the signature of a predictor that always answers the
dyad mean value). Output is plain XML with fixed float formatting, so the
files are diffable goldens.
"""

from __future__ import annotations

import math
import os

from .metrics import DEFAULT_CURVE_BINS, EccErrorCurve, ecc_error_curve_binned

WIDTH = 640
HEIGHT = 480
MARGIN_LEFT = 60
MARGIN_RIGHT = 20
MARGIN_TOP = 20
MARGIN_BOTTOM = 50

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def _fmt(x: float) -> str:
    return f"{x:.2f}"


def data_to_px(x: float, y: float, span: float):
    """Map data coordinates (ecc, error) in [0, span]^2 to pixel space."""
    plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT
    plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM
    px = MARGIN_LEFT + (x / span) * plot_w
    py = HEIGHT - MARGIN_BOTTOM - (y / span) * plot_h
    return px, py


def render_curve_svg(
    curve: EccErrorCurve,
    overlays: list[tuple[str, EccErrorCurve]] | None = None,
    path: str | os.PathLike = "curve.svg",
    label: str = "model",
) -> str:
    """Write the chart and return the path.

    `overlays` adds more named curves on the same axes (all curves must share
    the eccentricity span)."""
    curves = [(label, curve)] + list(overlays or [])
    span = curve.ecc_span
    for name, c in curves:
        if c.ecc_span != span:
            raise ValueError(f"curve {name!r} has a different eccentricity span")

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" '
        f'height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
    ]
    parts += _axes(span)
    x0, y0 = data_to_px(0.0, 0.0, span)
    x1, y1 = data_to_px(span, span, span)
    parts.append(
        f'<line x1="{_fmt(x0)}" y1="{_fmt(y0)}" x2="{_fmt(x1)}" y2="{_fmt(y1)}" '
        'stroke="#888888" stroke-dasharray="6,4" stroke-width="1"/>'
    )
    parts.append(
        f'<text x="{_fmt(x1 - 40)}" y="{_fmt(y1 + 16)}" font-size="12" '
        'fill="#888888">y = x</text>'
    )

    for k, (name, c) in enumerate(curves):
        color = PALETTE[k % len(PALETTE)]
        if not c.binned:
            c = ecc_error_curve_binned(c, DEFAULT_CURVE_BINS)
        filled = [b for b in c.binned if b.count > 0]
        if not filled:
            continue
        band_pts = []
        for b in filled:
            band_pts.append(data_to_px(b.bin_center, b.mean_error + b.stddev_error, span))
        for b in reversed(filled):
            band_pts.append(
                data_to_px(b.bin_center, max(0.0, b.mean_error - b.stddev_error), span)
            )
        band = " ".join(f"{_fmt(px)},{_fmt(py)}" for px, py in band_pts)
        parts.append(f'<polygon points="{band}" fill="{color}" fill-opacity="0.15"/>')
        line = " ".join(
            f"{_fmt(px)},{_fmt(py)}"
            for px, py in (data_to_px(b.bin_center, b.mean_error, span) for b in filled)
        )
        parts.append(
            f'<polyline points="{line}" fill="none" stroke="{color}" stroke-width="2"/>'
        )
        legend_y = MARGIN_TOP + 16 * (k + 1)
        parts.append(
            f'<line x1="{MARGIN_LEFT + 8}" y1="{legend_y - 4}" '
            f'x2="{MARGIN_LEFT + 32}" y2="{legend_y - 4}" '
            f'stroke="{color}" stroke-width="2"/>'
        )
        parts.append(
            f'<text x="{MARGIN_LEFT + 38}" y="{legend_y}" font-size="12">{_escape(name)}</text>'
        )

    parts.append("</svg>")
    svg = "\n".join(parts) + "\n"
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(svg)
    return os.fspath(path)


def _axes(span: float) -> list[str]:
    parts = []
    ox, oy = data_to_px(0.0, 0.0, span)
    xmax, _ = data_to_px(span, 0.0, span)
    _, ymax = data_to_px(0.0, span, span)
    parts.append(
        f'<line x1="{_fmt(ox)}" y1="{_fmt(oy)}" x2="{_fmt(xmax)}" y2="{_fmt(oy)}" '
        'stroke="black" stroke-width="1"/>'
    )
    parts.append(
        f'<line x1="{_fmt(ox)}" y1="{_fmt(oy)}" x2="{_fmt(ox)}" y2="{_fmt(ymax)}" '
        'stroke="black" stroke-width="1"/>'
    )
    n_ticks = 5
    for t in range(n_ticks + 1):
        v = span * t / n_ticks
        tx, ty = data_to_px(v, 0.0, span)
        parts.append(
            f'<line x1="{_fmt(tx)}" y1="{_fmt(ty)}" x2="{_fmt(tx)}" y2="{_fmt(ty + 5)}" '
            'stroke="black" stroke-width="1"/>'
        )
        parts.append(
            f'<text x="{_fmt(tx)}" y="{_fmt(ty + 20)}" font-size="11" '
            f'text-anchor="middle">{_tick(v)}</text>'
        )
        _, py = data_to_px(0.0, v, span)
        parts.append(
            f'<line x1="{_fmt(ox - 5)}" y1="{_fmt(py)}" x2="{_fmt(ox)}" y2="{_fmt(py)}" '
            'stroke="black" stroke-width="1"/>'
        )
        parts.append(
            f'<text x="{_fmt(ox - 8)}" y="{_fmt(py + 4)}" font-size="11" '
            f'text-anchor="end">{_tick(v)}</text>'
        )
    parts.append(
        f'<text x="{(MARGIN_LEFT + WIDTH - MARGIN_RIGHT) / 2:.2f}" '
        f'y="{HEIGHT - 12}" font-size="13" text-anchor="middle">eccentricity</text>'
    )
    mid_y = (MARGIN_TOP + HEIGHT - MARGIN_BOTTOM) / 2
    parts.append(
        f'<text x="16" y="{mid_y:.2f}" font-size="13" text-anchor="middle" '
        f'transform="rotate(-90 16 {mid_y:.2f})">absolute error</text>'
    )
    return parts


def _tick(v: float) -> str:
    return f"{v:g}"


def _escape(s: str) -> str:
    return (
        s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
    )
