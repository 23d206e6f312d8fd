"""Tiny self-contained SVG line and bar charts."""
from xml.sax.saxutils import escape

import numpy as np

WIDTH, HEIGHT = 720, 420
MARGIN = dict(left=70, right=20, top=40, bottom=55)
COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"]


def _nice_ticks(lo, hi, n=5):
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / n
    mag = 10 ** np.floor(np.log10(raw))
    step = min((1, 2, 5, 10), key=lambda k: abs(k * mag - raw)) * mag
    start = np.ceil(lo / step) * step
    return np.arange(start, hi + 0.5 * step, step)


class _Frame:
    def __init__(self, xlim, ylim):
        self.x0, self.x1 = xlim
        self.y0, self.y1 = ylim
        if self.x1 == self.x0:
            self.x1 = self.x0 + 1.0
        if self.y1 == self.y0:
            self.y1 = self.y0 + 1.0
        self.pw = WIDTH - MARGIN["left"] - MARGIN["right"]
        self.ph = HEIGHT - MARGIN["top"] - MARGIN["bottom"]

    def px(self, x):
        return MARGIN["left"] + (np.asarray(x) - self.x0) / (self.x1 - self.x0) * self.pw

    def py(self, y):
        return MARGIN["top"] + (self.y1 - np.asarray(y)) / (self.y1 - self.y0) * self.ph


def _axes(frame, title, xlabel, ylabel):
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH / 2:.1f}" y="22" text-anchor="middle" font-size="15">{escape(title)}</text>',
    ]
    left, top = MARGIN["left"], MARGIN["top"]
    out.append(f'<rect x="{left}" y="{top}" width="{frame.pw}" height="{frame.ph}" '
               'fill="none" stroke="#333"/>')
    for t in _nice_ticks(frame.x0, frame.x1):
        if frame.x0 <= t <= frame.x1:
            x = frame.px(t)
            out.append(f'<line x1="{x:.2f}" y1="{top + frame.ph}" x2="{x:.2f}" y2="{top + frame.ph + 5}" stroke="#333"/>')
            out.append(f'<text x="{x:.2f}" y="{top + frame.ph + 18}" text-anchor="middle">{t:g}</text>')
    for t in _nice_ticks(frame.y0, frame.y1):
        if frame.y0 <= t <= frame.y1:
            y = frame.py(t)
            out.append(f'<line x1="{left - 5}" y1="{y:.2f}" x2="{left + frame.pw}" y2="{y:.2f}" stroke="#ddd"/>')
            out.append(f'<text x="{left - 8}" y="{y + 4:.2f}" text-anchor="end">{t:g}</text>')
    out.append(f'<text x="{left + frame.pw / 2:.1f}" y="{HEIGHT - 12}" text-anchor="middle">{escape(xlabel)}</text>')
    out.append(f'<text transform="translate(16,{top + frame.ph / 2:.1f}) rotate(-90)" '
               f'text-anchor="middle">{escape(ylabel)}</text>')
    return out


def _write(path, parts):
    parts.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(parts) + "\n")


def _limits(values, pad=0.05):
    v = np.concatenate([np.asarray(a, dtype=float).ravel() for a in values])
    v = v[np.isfinite(v)]
    if v.size == 0:
        return 0.0, 1.0
    lo, hi = float(v.min()), float(v.max())
    span = hi - lo or 1.0
    return lo - pad * span, hi + pad * span


def line_chart(path, series, title="", xlabel="", ylabel="", step=False):
    """``series`` is a list of (x, y, label). NaN gaps break the line."""
    frame = _Frame(_limits([s[0] for s in series], 0.0), _limits([s[1] for s in series]))
    parts = _axes(frame, title, xlabel, ylabel)
    for i, (x, y, label) in enumerate(series):
        color = COLORS[i % len(COLORS)]
        x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
        if step and x.size > 1:
            x = np.repeat(x, 2)[1:]
            y = np.repeat(y, 2)[:-1]
        segment = []
        for xi, yi in zip(frame.px(x), frame.py(y)):
            if np.isfinite(yi):
                segment.append(f"{xi:.2f},{yi:.2f}")
                continue
            if segment:
                parts.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{" ".join(segment)}"/>')
            segment = []
        if segment:
            parts.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{" ".join(segment)}"/>')
        if label:
            ly = MARGIN["top"] + 16 + 16 * i
            lx = MARGIN["left"] + frame.pw - 150
            parts.append(f'<line x1="{lx}" y1="{ly - 4}" x2="{lx + 20}" y2="{ly - 4}" stroke="{color}" stroke-width="2"/>')
            parts.append(f'<text x="{lx + 26}" y="{ly}">{escape(label)}</text>')
    _write(path, parts)


def bar_chart(path, x, heights, title="", xlabel="", ylabel=""):
    x = np.asarray(x, dtype=float)
    h = np.asarray(heights, dtype=float)
    frame = _Frame((float(x.min()) - 0.5, float(x.max()) + 0.5), (0.0, float(np.nanmax(h)) * 1.05 or 1.0))
    parts = _axes(frame, title, xlabel, ylabel)
    width = max(1.0, 0.7 * frame.pw / max(len(x), 1))
    base = frame.py(0.0)
    for xi, hi in zip(frame.px(x), frame.py(h)):
        parts.append(f'<rect x="{xi - width / 2:.2f}" y="{hi:.2f}" width="{width:.2f}" '
                     f'height="{max(base - hi, 0.0):.2f}" fill="{COLORS[0]}"/>')
    _write(path, parts)
