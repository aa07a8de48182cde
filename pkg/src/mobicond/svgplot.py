"""Minimal deterministic SVG scatter plots.

Hand-rolled so plots are diffable in CI: fixed 800x600 canvas, fixed
formatting, no timestamps, no external plotting dependency.
"""
from __future__ import annotations

import math

__all__ = ["scatter_svg"]

WIDTH, HEIGHT = 800, 600
MARGIN_LEFT, MARGIN_RIGHT = 80, 30
MARGIN_TOP, MARGIN_BOTTOM = 30, 60
N_TICKS = 5


def _fmt(value: float) -> str:
    return f"{value:.2f}"


class _Axis:
    def __init__(self, values, pixel_lo: float, pixel_hi: float):
        finite = [v for v in values if math.isfinite(v)]
        lo, hi = min(finite), max(finite)
        if lo == hi:
            lo, hi = lo - 0.5, hi + 0.5
        pad = 0.05 * (hi - lo)
        self.lo, self.hi = lo - pad, hi + pad
        self.pixel_lo, self.pixel_hi = pixel_lo, pixel_hi

    def pixel(self, value: float) -> float:
        frac = (value - self.lo) / (self.hi - self.lo)
        return self.pixel_lo + frac * (self.pixel_hi - self.pixel_lo)

    def ticks(self) -> list[float]:
        return [self.lo + i * (self.hi - self.lo) / (N_TICKS - 1) for i in range(N_TICKS)]


def scatter_svg(
    xs,
    ys,
    x_label: str,
    y_label: str,
    line: list[tuple[float, float]] | None = None,
) -> str:
    """Render one scatter series plus an optional polyline as SVG text.

    Points with non-finite coordinates are skipped.  Output is a pure
    function of the inputs.
    """
    points = [(x, y) for x, y in zip(xs, ys) if math.isfinite(x) and math.isfinite(y)]
    if not points:
        raise ValueError("nothing to plot")
    x_axis = _Axis([p[0] for p in points], MARGIN_LEFT, WIDTH - MARGIN_RIGHT)
    y_axis = _Axis([p[1] for p in points], HEIGHT - MARGIN_BOTTOM, MARGIN_TOP)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<line x1="{MARGIN_LEFT}" y1="{HEIGHT - MARGIN_BOTTOM}" '
        f'x2="{WIDTH - MARGIN_RIGHT}" y2="{HEIGHT - MARGIN_BOTTOM}" stroke="black"/>',
        f'<line x1="{MARGIN_LEFT}" y1="{MARGIN_TOP}" '
        f'x2="{MARGIN_LEFT}" y2="{HEIGHT - MARGIN_BOTTOM}" stroke="black"/>',
    ]
    for tick in x_axis.ticks():
        px = x_axis.pixel(tick)
        parts.append(
            f'<line x1="{_fmt(px)}" y1="{HEIGHT - MARGIN_BOTTOM}" '
            f'x2="{_fmt(px)}" y2="{HEIGHT - MARGIN_BOTTOM + 6}" stroke="black"/>'
        )
        parts.append(
            f'<text x="{_fmt(px)}" y="{HEIGHT - MARGIN_BOTTOM + 22}" font-size="13" '
            f'text-anchor="middle">{tick:.3g}</text>'
        )
    for tick in y_axis.ticks():
        py = y_axis.pixel(tick)
        parts.append(
            f'<line x1="{MARGIN_LEFT - 6}" y1="{_fmt(py)}" '
            f'x2="{MARGIN_LEFT}" y2="{_fmt(py)}" stroke="black"/>'
        )
        parts.append(
            f'<text x="{MARGIN_LEFT - 10}" y="{_fmt(py + 4)}" font-size="13" '
            f'text-anchor="end">{tick:.3g}</text>'
        )
    parts.append(
        f'<text x="{(MARGIN_LEFT + WIDTH - MARGIN_RIGHT) / 2:.0f}" '
        f'y="{HEIGHT - 15}" font-size="15" text-anchor="middle">{x_label}</text>'
    )
    parts.append(
        f'<text x="20" y="{(MARGIN_TOP + HEIGHT - MARGIN_BOTTOM) / 2:.0f}" '
        f'font-size="15" text-anchor="middle" '
        f'transform="rotate(-90 20 {(MARGIN_TOP + HEIGHT - MARGIN_BOTTOM) / 2:.0f})">'
        f'{y_label}</text>'
    )
    if line:
        coords = " ".join(
            f"{_fmt(x_axis.pixel(x))},{_fmt(y_axis.pixel(y))}"
            for x, y in line
            if math.isfinite(x) and math.isfinite(y)
        )
        if coords:
            parts.append(
                f'<polyline points="{coords}" fill="none" stroke="#d62728" '
                f'stroke-width="1.5"/>'
            )
    for x, y in points:
        parts.append(
            f'<circle cx="{_fmt(x_axis.pixel(x))}" cy="{_fmt(y_axis.pixel(y))}" '
            f'r="4" fill="#1f77b4" fill-opacity="0.8"/>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
