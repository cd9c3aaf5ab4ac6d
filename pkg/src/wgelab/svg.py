"""Minimal SVG line plots: polylines, optional log axes, a legend."""
from __future__ import annotations

import math
from xml.sax.saxutils import escape

COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")
WIDTH, HEIGHT = 640, 420
LEFT, RIGHT, TOP, BOTTOM = 70, 150, 40, 55


def _ticks(lo, hi, log):
    if log:
        return [10.0 ** k for k in range(math.floor(lo), math.ceil(hi) + 1)]
    step = 10 ** math.floor(math.log10((hi - lo) or 1.0))
    if (hi - lo) / step < 3:
        step /= 2
    start = math.ceil(lo / step) * step
    return [start + i * step for i in range(int((hi - start) / step) + 1)]


def line_plot(series, title="", xlabel="", ylabel="", logx=False, logy=False) -> str:
    """Render ``{label: (xs, ys)}`` as an SVG document string.

    Points with non-finite values, or non-positive values on a log axis,
    are skipped.
    """
    def tx(v):
        return math.log10(v) if logx else v

    def ty(v):
        return math.log10(v) if logy else v

    def ok(x, y):
        good = math.isfinite(x) and math.isfinite(y)
        return good and (not logx or x > 0) and (not logy or y > 0)

    clean = {k: [(tx(x), ty(y)) for x, y in zip(*v) if ok(x, y)] for k, v in series.items()}
    pts = [p for v in clean.values() for p in v] or [(0.0, 0.0), (1.0, 1.0)]
    x0, x1 = min(p[0] for p in pts), max(p[0] for p in pts)
    y0, y1 = min(p[1] for p in pts), max(p[1] for p in pts)
    if x1 == x0:
        x0, x1 = x0 - 0.5, x1 + 0.5
    if y1 == y0:
        y0, y1 = y0 - 0.5, y1 + 0.5
    pw, ph = WIDTH - LEFT - RIGHT, HEIGHT - TOP - BOTTOM

    def px(v):
        return LEFT + (v - x0) / (x1 - x0) * pw

    def py(v):
        return TOP + ph - (v - y0) / (y1 - y0) * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
           f'font-family="sans-serif" font-size="11">',
           f'<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
           f'<text x="{LEFT + pw / 2}" y="{TOP - 15}" text-anchor="middle" font-size="13">'
           f'{escape(title)}</text>',
           f'<text x="{LEFT + pw / 2}" y="{HEIGHT - 12}" text-anchor="middle">{escape(xlabel)}</text>',
           f'<text x="15" y="{TOP + ph / 2}" text-anchor="middle" '
           f'transform="rotate(-90 15 {TOP + ph / 2})">{escape(ylabel)}</text>']
    for t in _ticks(x0, x1, logx):
        v = math.log10(t) if logx else t
        if x0 - 1e-9 <= v <= x1 + 1e-9:
            out.append(f'<line x1="{px(v):.1f}" y1="{TOP + ph}" x2="{px(v):.1f}" y2="{TOP + ph + 5}" stroke="black"/>')
            out.append(f'<text x="{px(v):.1f}" y="{TOP + ph + 18}" text-anchor="middle">{t:g}</text>')
    for t in _ticks(y0, y1, logy):
        v = math.log10(t) if logy else t
        if y0 - 1e-9 <= v <= y1 + 1e-9:
            out.append(f'<line x1="{LEFT - 5}" y1="{py(v):.1f}" x2="{LEFT}" y2="{py(v):.1f}" stroke="black"/>')
            out.append(f'<text x="{LEFT - 8}" y="{py(v) + 4:.1f}" text-anchor="end">{t:.3g}</text>')
    for i, (label, p) in enumerate(clean.items()):
        color = COLORS[i % len(COLORS)]
        if p:
            coords = " ".join(f"{px(a):.1f},{py(b):.1f}" for a, b in p)
            out.append(f'<polyline points="{coords}" fill="none" stroke="{color}" stroke-width="1.8"/>')
        ly = TOP + 15 + 18 * i
        out.append(f'<line x1="{WIDTH - RIGHT + 15}" y1="{ly}" x2="{WIDTH - RIGHT + 40}" y2="{ly}" '
                   f'stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{WIDTH - RIGHT + 46}" y="{ly + 4}">{escape(str(label))}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
