"""Dependency-free SVG plots: histogram with density, normal QQ plot, trace."""

import numpy as np
from scipy import stats

W, H = 480, 360
PAD = 48


def _fmt(x):
    return f"{x:.2f}"


class _Frame:
    def __init__(self, xlim, ylim):
        self.x0, self.x1 = xlim
        self.y0, self.y1 = ylim
        if self.x1 <= self.x0:
            self.x1 = self.x0 + 1.0
        if self.y1 <= self.y0:
            self.y1 = self.y0 + 1.0

    def px(self, x):
        return PAD + (np.asarray(x) - self.x0) / (self.x1 - self.x0) * (W - 2 * PAD)

    def py(self, y):
        return H - PAD - (np.asarray(y) - self.y0) / (self.y1 - self.y0) * (H - 2 * PAD)

    def axes(self, title, xlabel, ylabel):
        out = [f'<rect x="0" y="0" width="{W}" height="{H}" fill="white"/>',
               f'<line x1="{PAD}" y1="{H - PAD}" x2="{W - PAD}" y2="{H - PAD}" stroke="black"/>',
               f'<line x1="{PAD}" y1="{PAD}" x2="{PAD}" y2="{H - PAD}" stroke="black"/>',
               f'<text x="{W / 2}" y="{PAD / 2}" text-anchor="middle" font-size="14">{title}</text>',
               f'<text x="{W / 2}" y="{H - 10}" text-anchor="middle" font-size="12">{xlabel}</text>',
               f'<text x="14" y="{H / 2}" text-anchor="middle" font-size="12" '
               f'transform="rotate(-90 14 {H / 2})">{ylabel}</text>']
        for v in np.linspace(self.x0, self.x1, 5):
            x = _fmt(self.px(v))
            out.append(f'<line x1="{x}" y1="{H - PAD}" x2="{x}" y2="{H - PAD + 4}" stroke="black"/>')
            out.append(f'<text x="{x}" y="{H - PAD + 16}" text-anchor="middle" '
                       f'font-size="10">{v:.3g}</text>')
        for v in np.linspace(self.y0, self.y1, 5):
            y = _fmt(self.py(v))
            out.append(f'<line x1="{PAD - 4}" y1="{y}" x2="{PAD}" y2="{y}" stroke="black"/>')
            out.append(f'<text x="{PAD - 6}" y="{y}" text-anchor="end" '
                       f'font-size="10">{v:.3g}</text>')
        return out

    def polyline(self, x, y, colour, width=1.5):
        pts = " ".join(f"{_fmt(a)},{_fmt(b)}" for a, b in zip(self.px(x), self.py(y)))
        return f'<polyline points="{pts}" fill="none" stroke="{colour}" stroke-width="{width}"/>'


def _document(body):
    return ('<?xml version="1.0" encoding="UTF-8"?>\n'
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" '
            f'viewBox="0 0 {W} {H}">\n' + "\n".join(body) + "\n</svg>\n")


def histogram(values, sd=1.0, bins=40, title="Histogram vs normal density"):
    """Density-scaled histogram with the ``N(0, sd^2)`` density overlaid."""
    values = np.asarray(values, dtype=float)
    counts, edges = np.histogram(values, bins=bins, density=True)
    grid = np.linspace(edges[0], edges[-1], 200)
    dens = stats.norm.pdf(grid, scale=sd) if sd > 0 else np.zeros_like(grid)
    frame = _Frame((edges[0], edges[-1]), (0.0, max(counts.max(), dens.max()) * 1.05))
    body = frame.axes(title, "value", "density")
    base = frame.py(0.0)
    for c, a, b in zip(counts, edges[:-1], edges[1:]):
        x0, x1, top = frame.px(a), frame.px(b), frame.py(c)
        body.append(f'<rect x="{_fmt(x0)}" y="{_fmt(top)}" width="{_fmt(x1 - x0)}" '
                    f'height="{_fmt(base - top)}" fill="#9ecae1" stroke="#3182bd"/>')
    body.append(frame.polyline(grid, dens, "#d62728"))
    return _document(body)


def qq(values, sd=1.0, title="Normal QQ plot"):
    """Sample quantiles against ``N(0, sd^2)`` quantiles with the identity line."""
    values = np.sort(np.asarray(values, dtype=float))
    n = len(values)
    theo = stats.norm.ppf((np.arange(1, n + 1) - 0.5) / n, scale=max(sd, 1e-300))
    if n > 400:
        idx = np.unique(np.linspace(0, n - 1, 400).astype(int))
        theo, values = theo[idx], values[idx]
    lo = min(theo.min(), values.min())
    hi = max(theo.max(), values.max())
    frame = _Frame((lo, hi), (lo, hi))
    body = frame.axes(title, "normal quantile", "sample quantile")
    body.append(frame.polyline([lo, hi], [lo, hi], "#888888", 1.0))
    for a, b in zip(frame.px(theo), frame.py(values)):
        body.append(f'<circle cx="{_fmt(a)}" cy="{_fmt(b)}" r="1.6" fill="#3182bd"/>')
    return _document(body)


def trace(x, y, reference=None, title="Running variance ratio", ylabel="ratio"):
    """Polyline of ``y`` against ``x`` with an optional horizontal reference."""
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    lo, hi = float(np.nanmin(y)), float(np.nanmax(y))
    if reference is not None:
        lo, hi = min(lo, reference), max(hi, reference)
    span = hi - lo or 1.0
    frame = _Frame((x.min(), x.max()), (lo - 0.05 * span, hi + 0.05 * span))
    body = frame.axes(title, "replications", ylabel)
    if reference is not None:
        body.append(frame.polyline([x.min(), x.max()], [reference, reference], "#d62728", 1.0))
    body.append(frame.polyline(x, y, "#3182bd"))
    return _document(body)
