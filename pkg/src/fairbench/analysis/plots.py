"""Minimal deterministic SVG scatter plots.

Coordinates are printed with a fixed number of decimals so the same input
always produces the same bytes.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from html import escape

from .._io import atomic_write_text

PALETTE = (
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
)
WIDTH, HEIGHT = 640, 480
MARGIN = {"left": 70, "right": 190, "top": 30, "bottom": 55}


@dataclass(frozen=True)
class Series:
    label: str
    points: tuple = ()
    # (mean_x, mean_y, std_x, std_y): rectangle centered on the mean,
    # width std_x and height std_y in data units
    rect: tuple | None = None


@dataclass
class _Frame:
    x0: float
    x1: float
    y0: float
    y1: float

    def px(self, x: float) -> float:
        w = WIDTH - MARGIN["left"] - MARGIN["right"]
        return MARGIN["left"] + (x - self.x0) / (self.x1 - self.x0) * w

    def py(self, y: float) -> float:
        h = HEIGHT - MARGIN["top"] - MARGIN["bottom"]
        return HEIGHT - MARGIN["bottom"] - (y - self.y0) / (self.y1 - self.y0) * h


def rect_geometry(rect) -> tuple[float, float, float, float]:
    """Data-space (x_min, y_min, width, height) of a mean +/- std rectangle."""
    mx, my, sx, sy = rect
    return mx - sx / 2, my - sy / 2, sx, sy


def _f(v: float) -> str:
    return f"{v:.2f}"


def _bounds(series: list[Series]) -> _Frame:
    xs, ys = [], []
    for s in series:
        for x, y in s.points:
            xs.append(x)
            ys.append(y)
        if s.rect is not None:
            x0, y0, w, h = rect_geometry(s.rect)
            xs += [x0, x0 + w]
            ys += [y0, y0 + h]
    if not xs:
        return _Frame(0.0, 1.0, 0.0, 1.0)
    lo_x, hi_x, lo_y, hi_y = min(xs), max(xs), min(ys), max(ys)
    pad_x = (hi_x - lo_x) * 0.05 or 0.5
    pad_y = (hi_y - lo_y) * 0.05 or 0.5
    return _Frame(lo_x - pad_x, hi_x + pad_x, lo_y - pad_y, hi_y + pad_y)


def render_scatter_svg(series, x_label: str, y_label: str, title: str = "") -> str:
    series = [
        replace(s, points=tuple((float(x), float(y)) for x, y in s.points if x is not None and y is not None))
        for s in series
    ]
    if not series:
        raise ValueError("scatter plot needs at least one series")
    if not any(s.points or s.rect for s in series):
        raise ValueError("scatter plot needs at least one point")
    fr = _bounds(series)
    left, bottom = MARGIN["left"], HEIGHT - MARGIN["bottom"]
    right, top = WIDTH - MARGIN["right"], MARGIN["top"]
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<line x1="{left}" y1="{bottom}" x2="{right}" y2="{bottom}" stroke="black"/>',
        f'<line x1="{left}" y1="{bottom}" x2="{left}" y2="{top}" stroke="black"/>',
    ]
    for k in range(5):
        xv = fr.x0 + (fr.x1 - fr.x0) * k / 4
        yv = fr.y0 + (fr.y1 - fr.y0) * k / 4
        out.append(f'<text x="{_f(fr.px(xv))}" y="{bottom + 16}" text-anchor="middle">{xv:.3g}</text>')
        out.append(f'<text x="{left - 6}" y="{_f(fr.py(yv) + 4)}" text-anchor="end">{yv:.3g}</text>')
    out.append(
        f'<text x="{(left + right) // 2}" y="{HEIGHT - 15}" text-anchor="middle">{escape(x_label)}</text>'
    )
    out.append(
        f'<text x="18" y="{(top + bottom) // 2}" text-anchor="middle" '
        f'transform="rotate(-90 18 {(top + bottom) // 2})">{escape(y_label)}</text>'
    )
    if title:
        out.append(f'<text x="{left}" y="18">{escape(title)}</text>')
    for i, s in enumerate(series):
        color = PALETTE[i % len(PALETTE)]
        if s.rect is not None:
            x0, y0, w, h = rect_geometry(s.rect)
            px0, py1 = fr.px(x0), fr.py(y0 + h)
            pw, ph = fr.px(x0 + w) - px0, fr.py(y0) - py1
            out.append(
                f'<rect class="std" x="{_f(px0)}" y="{_f(py1)}" width="{_f(pw)}" height="{_f(ph)}" '
                f'fill="{color}" fill-opacity="0.25" stroke="{color}"/>'
            )
        for x, y in s.points:
            out.append(f'<circle cx="{_f(fr.px(x))}" cy="{_f(fr.py(y))}" r="3" fill="{color}"/>')
        ly = top + 14 * i + 6
        out.append(f'<rect x="{right + 12}" y="{ly - 8}" width="9" height="9" fill="{color}"/>')
        out.append(f'<text x="{right + 26}" y="{ly}">{escape(s.label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit_scatter_svg(series, x_label: str, y_label: str, path, title: str = "") -> None:
    atomic_write_text(path, render_scatter_svg(series, x_label, y_label, title))
