"""Minimal SVG emitter for experiment figures: polylines, points, bars, axes.

Coordinates are written with fixed precision so identical data always
produce identical bytes.
"""

from __future__ import annotations

import math
from xml.sax.saxutils import escape

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b")


def _num(v: float) -> str:
    return f"{v:.2f}"


def _tick_label(v: float) -> str:
    if v == 0:
        return "0"
    if abs(v) >= 1e4 or abs(v) < 1e-3:
        return f"{v:.1e}"
    return f"{v:.4g}"


def _nice_ticks(lo: float, hi: float, n: int = 5) -> list:
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / n
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 2.5, 5, 10) if m * mag >= raw), default=10 * mag)
    start = math.ceil(lo / step - 1e-9) * step
    ticks = []
    t = start
    while t <= hi + 1e-9 * step:
        ticks.append(round(t, 12))
        t += step
    return ticks


class Figure:
    """One set of axes. Add artists, then call :meth:`render`."""

    def __init__(self, title: str, xlabel: str, ylabel: str, width: int = 640, height: int = 420,
                 logy: bool = False):
        self.title, self.xlabel, self.ylabel = title, xlabel, ylabel
        self.width, self.height, self.logy = width, height, logy
        self.margin = (70, 20, 40, 55)  # left, right, top, bottom
        self._items = []
        self._xs, self._ys = [], []

    def _ty(self, y):
        return math.log10(max(y, 1e-300)) if self.logy else y

    def line(self, xs, ys, label: str = "", color: str | None = None, dash: bool = False):
        self._items.append(("line", list(map(float, xs)), list(map(float, ys)), label, color, dash))
        self._xs += list(map(float, xs))
        self._ys += [self._ty(float(y)) for y in ys]
        return self

    def points(self, xs, ys, label: str = "", color: str | None = None, r: float = 2.0):
        self._items.append(("points", list(map(float, xs)), list(map(float, ys)), label, color, r))
        self._xs += list(map(float, xs))
        self._ys += [self._ty(float(y)) for y in ys]
        return self

    def bars(self, edges, counts, label: str = "", color: str | None = None):
        self._items.append(("bars", list(map(float, edges)), list(map(float, counts)), label, color, None))
        self._xs += [float(edges[0]), float(edges[-1])]
        self._ys += [0.0] + [float(c) for c in counts]
        return self

    def vline(self, x: float, label: str = ""):
        self._items.append(("vline", [float(x)], [], label, "#888888", True))
        self._xs.append(float(x))
        return self

    def _bounds(self):
        xs, ys = self._xs or [0.0, 1.0], self._ys or [0.0, 1.0]
        x0, x1, y0, y1 = min(xs), max(xs), min(ys), max(ys)
        if x1 == x0:
            x0, x1 = x0 - 0.5, x1 + 0.5
        if y1 == y0:
            y0, y1 = y0 - 0.5, y1 + 0.5
        pad = 0.05 * (y1 - y0)
        return x0, x1, y0 - pad, y1 + pad

    def render(self) -> str:
        left, right, top, bottom = self.margin
        pw, ph = self.width - left - right, self.height - top - bottom
        x0, x1, y0, y1 = self._bounds()

        def px(x):
            return left + (x - x0) / (x1 - x0) * pw

        def py(y):
            return top + (1 - (self._ty(y) - y0) / (y1 - y0)) * ph

        def py_raw(ty):
            return top + (1 - (ty - y0) / (y1 - y0)) * ph

        out = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{self.width}" height="{self.height}" '
            f'viewBox="0 0 {self.width} {self.height}" font-family="sans-serif" font-size="11">',
            f'<rect width="{self.width}" height="{self.height}" fill="white"/>',
            f'<text x="{_num(self.width / 2)}" y="20" text-anchor="middle" font-size="13">{escape(self.title)}</text>',
            f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
        ]
        for t in _nice_ticks(x0, x1):
            out.append(f'<line x1="{_num(px(t))}" y1="{top + ph}" x2="{_num(px(t))}" y2="{top + ph + 4}" stroke="black"/>')
            out.append(f'<text x="{_num(px(t))}" y="{top + ph + 16}" text-anchor="middle">{_tick_label(t)}</text>')
        if self.logy:
            yticks = list(range(math.ceil(y0), math.floor(y1) + 1))
            labels = [f"1e{t}" for t in yticks]
        else:
            yticks = _nice_ticks(y0, y1)
            labels = [_tick_label(t) for t in yticks]
        for t, lab in zip(yticks, labels):
            out.append(f'<line x1="{left - 4}" y1="{_num(py_raw(t))}" x2="{left}" y2="{_num(py_raw(t))}" stroke="black"/>')
            out.append(f'<text x="{left - 6}" y="{_num(py_raw(t) + 4)}" text-anchor="end">{lab}</text>')
        out.append(f'<text x="{_num(left + pw / 2)}" y="{self.height - 12}" text-anchor="middle">{escape(self.xlabel)}</text>')
        out.append(f'<text x="16" y="{_num(top + ph / 2)}" text-anchor="middle" '
                   f'transform="rotate(-90 16 {_num(top + ph / 2)})">{escape(self.ylabel)}</text>')

        legend = []
        for i, (kind, xs, ys, label, color, extra) in enumerate(self._items):
            color = color or PALETTE[i % len(PALETTE)]
            if kind == "line":
                pts = " ".join(f"{_num(px(x))},{_num(py(y))}" for x, y in zip(xs, ys))
                dash = ' stroke-dasharray="5,3"' if extra else ""
                out.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"{dash}/>')
            elif kind == "points":
                for x, y in zip(xs, ys):
                    out.append(f'<circle cx="{_num(px(x))}" cy="{_num(py(y))}" r="{extra}" fill="{color}"/>')
            elif kind == "bars":
                base = py_raw(max(y0, 0.0))
                for lo, hi, c in zip(xs[:-1], xs[1:], ys):
                    yt = py(c)
                    out.append(f'<rect x="{_num(px(lo))}" y="{_num(yt)}" width="{_num(px(hi) - px(lo))}" '
                               f'height="{_num(max(base - yt, 0.0))}" fill="{color}" fill-opacity="0.6" stroke="{color}"/>')
            elif kind == "vline":
                x = px(xs[0])
                out.append(f'<line x1="{_num(x)}" y1="{top}" x2="{_num(x)}" y2="{top + ph}" '
                           f'stroke="{color}" stroke-dasharray="4,3"/>')
                if label:
                    out.append(f'<text x="{_num(x + 3)}" y="{top + 12}">{escape(label)}</text>')
                continue
            if label:
                legend.append((label, color))
        for i, (label, color) in enumerate(legend):
            y = top + 14 + 14 * i
            out.append(f'<rect x="{left + pw - 150}" y="{y - 8}" width="10" height="10" fill="{color}"/>')
            out.append(f'<text x="{left + pw - 135}" y="{y + 1}">{escape(label)}</text>')
        out.append("</svg>")
        return "\n".join(out) + "\n"
