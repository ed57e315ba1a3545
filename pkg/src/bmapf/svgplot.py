"""Minimal deterministic SVG charts (lines, rects, text only).

Hand-rolled so that identical inputs produce byte-identical documents;
no timestamps, no library metadata.
"""

from __future__ import annotations

import math
from xml.sax.saxutils import escape

WIDTH, HEIGHT = 640, 420
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 70, 20, 40, 55
SERIES_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd")


def _f(v: float) -> str:
    return f"{v:.2f}"


class _Canvas:
    def __init__(self, title: str):
        self.parts = [
            '<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
            f'width="{WIDTH}" height="{HEIGHT}" font-family="sans-serif">',
            f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        ]
        if title:
            self.text(WIDTH / 2, MARGIN_T / 2 + 5, title, anchor="middle", size=14)

    def line(self, x1, y1, x2, y2, color="#000000", width=1.0):
        self.parts.append(
            f'<line x1="{_f(x1)}" y1="{_f(y1)}" x2="{_f(x2)}" y2="{_f(y2)}" '
            f'stroke="{color}" stroke-width="{_f(width)}"/>'
        )

    def rect(self, x, y, w, h, color):
        self.parts.append(
            f'<rect x="{_f(x)}" y="{_f(y)}" width="{_f(w)}" height="{_f(h)}" fill="{color}"/>'
        )

    def text(self, x, y, s, anchor="middle", size=11, color="#000000"):
        self.parts.append(
            f'<text x="{_f(x)}" y="{_f(y)}" text-anchor="{anchor}" '
            f'font-size="{size}" fill="{color}">{escape(str(s))}</text>'
        )

    def render(self) -> str:
        return "\n".join(self.parts + ["</svg>"]) + "\n"


def _ticks(lo: float, hi: float, n: int = 5):
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / n
    mag = 10.0 ** math.floor(math.log10(raw))
    step = min(s for s in (mag, 2 * mag, 2.5 * mag, 5 * mag, 10 * mag) if s >= raw)
    first = math.ceil(lo / step) * step
    ticks = []
    v = first
    while v <= hi + 1e-12 * step:
        ticks.append(round(v, 12))
        v += step
    return ticks


def _axes(canvas: _Canvas, x_lo, x_hi, y_lo, y_hi, xlabel, ylabel, x_ticks=True):
    px = lambda x: MARGIN_L + (x - x_lo) / (x_hi - x_lo) * (WIDTH - MARGIN_L - MARGIN_R)
    py = lambda y: HEIGHT - MARGIN_B - (y - y_lo) / (y_hi - y_lo) * (HEIGHT - MARGIN_T - MARGIN_B)
    canvas.line(MARGIN_L, HEIGHT - MARGIN_B, WIDTH - MARGIN_R, HEIGHT - MARGIN_B)
    canvas.line(MARGIN_L, MARGIN_T, MARGIN_L, HEIGHT - MARGIN_B)
    if x_ticks:
        for tick in _ticks(x_lo, x_hi):
            canvas.line(px(tick), HEIGHT - MARGIN_B, px(tick), HEIGHT - MARGIN_B + 4)
            canvas.text(px(tick), HEIGHT - MARGIN_B + 17, f"{tick:g}")
    for tick in _ticks(y_lo, y_hi):
        canvas.line(MARGIN_L - 4, py(tick), MARGIN_L, py(tick))
        canvas.text(MARGIN_L - 8, py(tick) + 4, f"{tick:g}", anchor="end")
    canvas.text((MARGIN_L + WIDTH - MARGIN_R) / 2, HEIGHT - 12, xlabel)
    canvas.text(18, MARGIN_T - 10, ylabel, anchor="start")
    return px, py


def line_chart(x, series: dict, xlabel: str, ylabel: str, title: str = "") -> str:
    """Line chart of one or more series over shared x positions."""
    if not series or len(x) == 0:
        raise ValueError("line_chart needs at least one series and one point")
    x = [float(v) for v in x]
    all_y = [v for ys in series.values() for v in ys]
    y_lo, y_hi = min(all_y + [0.0]), max(all_y)
    pad = 0.05 * (y_hi - y_lo or 1.0)
    canvas = _Canvas(title)
    px, py = _axes(canvas, min(x), max(x) if max(x) > min(x) else min(x) + 1,
                   y_lo, y_hi + pad, xlabel, ylabel)
    for si, (label, ys) in enumerate(series.items()):
        color = SERIES_COLORS[si % len(SERIES_COLORS)]
        pts = [(px(xv), py(float(yv))) for xv, yv in zip(x, ys)]
        for (x1, y1), (x2, y2) in zip(pts, pts[1:]):
            canvas.line(x1, y1, x2, y2, color=color, width=1.5)
        for cx, cy in pts:
            canvas.rect(cx - 2, cy - 2, 4, 4, color)
        canvas.rect(WIDTH - MARGIN_R - 150, MARGIN_T + 8 + 16 * si, 10, 10, color)
        canvas.text(WIDTH - MARGIN_R - 135, MARGIN_T + 17 + 16 * si, label, anchor="start")
    return canvas.render()


def bar_chart(groups, series: dict, xlabel: str, ylabel: str, title: str = "") -> str:
    """Grouped bars with symmetric error whiskers.

    ``series`` maps label -> (heights, half_widths); one bar per group per
    series, whiskers at height +- half_width.
    """
    if not series or len(groups) == 0:
        raise ValueError("bar_chart needs at least one series and one group")
    tops = [h + e for hs, es in series.values() for h, e in zip(hs, es)]
    y_hi = max(tops + [1e-12])
    canvas = _Canvas(title)
    px, py = _axes(canvas, -0.5, len(groups) - 0.5, 0.0, 1.1 * y_hi, xlabel, ylabel,
                   x_ticks=False)
    n_series = len(series)
    group_w = (WIDTH - MARGIN_L - MARGIN_R) / len(groups)
    bar_w = 0.7 * group_w / n_series
    for si, (label, (heights, errors)) in enumerate(series.items()):
        color = SERIES_COLORS[si % len(SERIES_COLORS)]
        for gi, (h, e) in enumerate(zip(heights, errors)):
            cx = px(gi) + (si - (n_series - 1) / 2) * bar_w
            x0 = cx - bar_w / 2
            canvas.rect(x0, py(h), bar_w, py(0.0) - py(h), color)
            canvas.line(cx, py(max(h - e, 0.0)), cx, py(h + e), width=1.2)
            canvas.line(cx - 3, py(h + e), cx + 3, py(h + e), width=1.2)
            canvas.line(cx - 3, py(max(h - e, 0.0)), cx + 3, py(max(h - e, 0.0)), width=1.2)
        canvas.rect(WIDTH - MARGIN_R - 150, MARGIN_T + 8 + 16 * si, 10, 10, color)
        canvas.text(WIDTH - MARGIN_R - 135, MARGIN_T + 17 + 16 * si, label, anchor="start")
    for gi, name in enumerate(groups):
        canvas.text(px(gi), HEIGHT - MARGIN_B + 17, f"{name:g}" if isinstance(name, float) else str(name))
    return canvas.render()
