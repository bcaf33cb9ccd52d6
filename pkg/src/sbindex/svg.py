"""Minimal deterministic SVG charts (log-log CCDF and yearly time series).

Output depends only on the inputs: fixed 800x600 viewport, coordinates
printed with two decimals, no timestamps or random ids.
"""

from __future__ import annotations

import math
from html import escape
from typing import Sequence

WIDTH, HEIGHT = 800, 600
LEFT, RIGHT, TOP, BOTTOM = 90, 30, 50, 70
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def _f(v: float) -> str:
    s = f"{v:.2f}"
    return "0.00" if s == "-0.00" else s


class _Canvas:
    def __init__(self, title: str):
        self.parts = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
            f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
            f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
            f'<text x="{WIDTH / 2:.2f}" y="28" text-anchor="middle" font-size="15">{escape(title)}</text>',
        ]

    def add(self, s: str):
        self.parts.append(s)

    def render(self) -> bytes:
        return ("\n".join(self.parts + ["</svg>"]) + "\n").encode("utf-8")


class _Axis:
    def __init__(self, lo: float, hi: float, p0: float, p1: float, log: bool):
        self.log = log
        if log:
            lo, hi = math.log10(lo), math.log10(hi)
        if hi <= lo:
            hi = lo + 1.0
        self.lo, self.hi, self.p0, self.p1 = lo, hi, p0, p1

    def __call__(self, v: float) -> float:
        t = math.log10(v) if self.log else v
        return self.p0 + (t - self.lo) / (self.hi - self.lo) * (self.p1 - self.p0)


def _decades(lo: float, hi: float) -> tuple[int, int]:
    d0 = math.floor(math.log10(lo))
    d1 = math.ceil(math.log10(hi))
    return d0, max(d1, d0 + 1)


def _pow10_label(k: int) -> str:
    return f'10<tspan dy="-6" font-size="9">{k}</tspan>'


def _frame(cv: _Canvas, xlabel: str, ylabel: str):
    x0, x1, y0, y1 = LEFT, WIDTH - RIGHT, HEIGHT - BOTTOM, TOP
    cv.add(f'<rect x="{x0}" y="{y1}" width="{x1 - x0}" height="{y0 - y1}" fill="none" stroke="black"/>')
    cv.add(f'<text x="{(x0 + x1) / 2:.2f}" y="{HEIGHT - 20}" text-anchor="middle">{escape(xlabel)}</text>')
    cv.add(
        f'<text x="20" y="{(y0 + y1) / 2:.2f}" text-anchor="middle" '
        f'transform="rotate(-90 20 {(y0 + y1) / 2:.2f})">{escape(ylabel)}</text>'
    )


def _polyline(xs, ys, sx, sy, color: str, width: float = 1.5, dash: str | None = None) -> str:
    pts = " ".join(f"{_f(sx(x))},{_f(sy(y))}" for x, y in zip(xs, ys))
    extra = f' stroke-dasharray="{dash}"' if dash else ""
    return f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="{width}"{extra}/>'


def _legend(cv: _Canvas, entries: Sequence[tuple[str, str]], right: bool = False):
    x, y = (WIDTH - RIGHT - 150 if right else LEFT + 12), TOP + 16
    for i, (label, color) in enumerate(entries):
        yy = y + 16 * i
        cv.add(f'<line x1="{x}" y1="{yy - 4}" x2="{x + 18}" y2="{yy - 4}" stroke="{color}" stroke-width="2"/>')
        cv.add(f'<text x="{x + 24}" y="{yy}">{escape(label)}</text>')


def loglog_chart(
    title: str,
    points: tuple[Sequence[float], Sequence[float]],
    line: tuple[Sequence[float], Sequence[float]],
    shade_x: tuple[float, float] | None = None,
    shade_y: tuple[float, float] | None = None,
    xlabel: str = "assets (billion USD)",
    ylabel: str = "P(A > x)",
) -> bytes:
    """Empirical CCDF as markers, fitted law as a line, fit window shaded."""
    px, py = points
    lx, ly = line
    xs = [v for v in list(px) + list(lx) if v > 0]
    ys = [v for v in list(py) + list(ly) if v > 0]
    dx = _decades(min(xs), max(xs))
    dy = _decades(min(ys), max(ys))
    sx = _Axis(10.0 ** dx[0], 10.0 ** dx[1], LEFT, WIDTH - RIGHT, log=True)
    sy = _Axis(10.0 ** dy[0], 10.0 ** dy[1], HEIGHT - BOTTOM, TOP, log=True)

    cv = _Canvas(title)
    if shade_x is not None:
        a = max(shade_x[0], 10.0 ** dx[0])
        b = min(shade_x[1], 10.0 ** dx[1])
        if b > a:
            cv.add(
                f'<rect x="{_f(sx(a))}" y="{TOP}" width="{_f(sx(b) - sx(a))}" '
                f'height="{HEIGHT - BOTTOM - TOP}" fill="#dddddd" fill-opacity="0.6"/>'
            )
    if shade_y is not None:
        a = max(shade_y[0], 10.0 ** dy[0])
        b = min(shade_y[1], 10.0 ** dy[1])
        if b > a:
            cv.add(
                f'<rect x="{LEFT}" y="{_f(sy(b))}" width="{WIDTH - RIGHT - LEFT}" '
                f'height="{_f(sy(a) - sy(b))}" fill="#dddddd" fill-opacity="0.6"/>'
            )
    for k in range(dx[0], dx[1] + 1):
        X = sx(10.0**k)
        cv.add(f'<line x1="{_f(X)}" y1="{HEIGHT - BOTTOM}" x2="{_f(X)}" y2="{HEIGHT - BOTTOM + 5}" stroke="black"/>')
        cv.add(f'<text x="{_f(X)}" y="{HEIGHT - BOTTOM + 20}" text-anchor="middle">{_pow10_label(k)}</text>')
    for k in range(dy[0], dy[1] + 1):
        Y = sy(10.0**k)
        cv.add(f'<line x1="{LEFT - 5}" y1="{_f(Y)}" x2="{LEFT}" y2="{_f(Y)}" stroke="black"/>')
        cv.add(f'<text x="{LEFT - 8}" y="{_f(Y + 4)}" text-anchor="end">{_pow10_label(k)}</text>')
    _frame(cv, xlabel, ylabel)

    cv.add(f'<g fill="{PALETTE[0]}">')
    for x, y in zip(px, py):
        if x > 0 and y > 0:
            cv.add(f'<circle cx="{_f(sx(x))}" cy="{_f(sy(y))}" r="2"/>')
    cv.add("</g>")
    keep = [(x, y) for x, y in zip(lx, ly) if x > 0 and y > 0]
    if keep:
        cv.add(_polyline([k[0] for k in keep], [k[1] for k in keep], sx, sy, PALETTE[1], 2.0))
    _legend(cv, [("empirical", PALETTE[0]), ("Pareto fit", PALETTE[1])], right=True)
    return cv.render()


def timeseries_chart(
    title: str,
    series: Sequence[dict],
    xlabel: str = "year",
    ylabel: str = "trillion USD",
) -> bytes:
    """Line chart over calendar years.

    Each series dict has ``label``, ``x``, ``y`` and optionally ``y_lo`` and
    ``y_hi``, drawn as a shaded band.
    """
    xs = [x for s in series for x in s["x"]]
    ys = [y for s in series for key in ("y", "y_lo", "y_hi") for y in (s.get(key) or [])]
    x0, x1 = min(xs), max(xs)
    if x1 == x0:
        x0, x1 = x0 - 1, x1 + 1
    ytop = max(ys + [0.0])
    ybot = min(ys + [0.0])
    step = _nice_step((ytop - ybot) / 5 if ytop > ybot else 1.0)
    ybot = math.floor(ybot / step) * step
    ytop = math.ceil(ytop / step) * step
    if ytop == ybot:
        ytop = ybot + step
    sx = _Axis(x0, x1, LEFT, WIDTH - RIGHT, log=False)
    sy = _Axis(ybot, ytop, HEIGHT - BOTTOM, TOP, log=False)

    cv = _Canvas(title)
    for yr in range(math.ceil(x0), math.floor(x1) + 1):
        X = sx(yr)
        cv.add(f'<line x1="{_f(X)}" y1="{HEIGHT - BOTTOM}" x2="{_f(X)}" y2="{HEIGHT - BOTTOM + 5}" stroke="black"/>')
        cv.add(f'<text x="{_f(X)}" y="{HEIGHT - BOTTOM + 20}" text-anchor="middle">{yr}</text>')
    nt = int(round((ytop - ybot) / step))
    for i in range(nt + 1):
        v = ybot + i * step
        Y = sy(v)
        cv.add(f'<line x1="{LEFT - 5}" y1="{_f(Y)}" x2="{LEFT}" y2="{_f(Y)}" stroke="black"/>')
        cv.add(f'<text x="{LEFT - 8}" y="{_f(Y + 4)}" text-anchor="end">{v:g}</text>')
    _frame(cv, xlabel, ylabel)

    legend = []
    for i, s in enumerate(series):
        color = PALETTE[i % len(PALETTE)]
        if s.get("y_lo") and s.get("y_hi"):
            upper = [f"{_f(sx(x))},{_f(sy(y))}" for x, y in zip(s["x"], s["y_hi"])]
            lower = [f"{_f(sx(x))},{_f(sy(y))}" for x, y in zip(s["x"], s["y_lo"])]
            pts = " ".join(upper + lower[::-1])
            cv.add(f'<polygon points="{pts}" fill="{color}" fill-opacity="0.2" stroke="none"/>')
        cv.add(_polyline(s["x"], s["y"], sx, sy, color, 2.0))
        cv.add(f'<g fill="{color}">')
        for x, y in zip(s["x"], s["y"]):
            cv.add(f'<circle cx="{_f(sx(x))}" cy="{_f(sy(y))}" r="3"/>')
        cv.add("</g>")
        legend.append((s["label"], color))
    _legend(cv, legend)
    return cv.render()


def _nice_step(raw: float) -> float:
    mag = 10.0 ** math.floor(math.log10(raw))
    for m in (1.0, 2.0, 5.0, 10.0):
        if raw <= m * mag:
            return m * mag
    return 10.0 * mag
