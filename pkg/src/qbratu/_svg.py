"""Minimal SVG line/marker plots: axes, ticks, polylines, markers, legend."""

from __future__ import annotations

from dataclasses import dataclass, field
from xml.sax.saxutils import escape

import numpy as np

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#555555")


@dataclass
class Series:
    xs: np.ndarray
    ys: np.ndarray
    label: str
    color: str = PALETTE[0]
    style: str = "line"  # line | markers


@dataclass
class Panel:
    title: str = ""
    xlabel: str = ""
    ylabel: str = ""
    series: list[Series] = field(default_factory=list)
    note: str = ""

    def line(self, xs, ys, label, color=PALETTE[0]):
        self.series.append(Series(np.asarray(xs, float), np.asarray(ys, float), label, color, "line"))

    def markers(self, xs, ys, label, color=PALETTE[1]):
        self.series.append(Series(np.asarray(xs, float), np.asarray(ys, float), label, color, "markers"))


def nice_ticks(lo: float, hi: float, n: int = 5) -> np.ndarray:
    if not np.isfinite(lo) or not np.isfinite(hi):
        return np.array([0.0, 1.0])
    if hi <= lo:
        lo, hi = lo - 0.5, hi + 0.5
    raw = (hi - lo) / n
    mag = 10 ** np.floor(np.log10(raw))
    step = min((m * mag for m in (1, 2, 2.5, 5, 10) if m * mag >= raw), default=10 * mag)
    start = np.floor(lo / step) * step
    return np.arange(start, hi + step * 0.5, step)


def _fmt(v: float) -> str:
    return f"{v:.6g}"


def _panel_svg(panel: Panel, x0: float, y0: float, w: float, h: float) -> list[str]:
    left, right, top, bottom = 58, 12, 26, 40
    pw, ph = w - left - right, h - top - bottom
    finite = [s for s in panel.series if np.any(np.isfinite(s.ys))]
    out = [f'<g transform="translate({x0:.1f},{y0:.1f})">']
    out.append(f'<text x="{w / 2:.1f}" y="16" text-anchor="middle" font-size="13">{escape(panel.title)}</text>')
    if finite:
        xs = np.concatenate([s.xs[np.isfinite(s.ys)] for s in finite])
        ys = np.concatenate([s.ys[np.isfinite(s.ys)] for s in finite])
        xt, yt = nice_ticks(xs.min(), xs.max()), nice_ticks(ys.min(), ys.max())
    else:
        xt = yt = np.array([0.0, 1.0])
    xmin, xmax, ymin, ymax = xt[0], xt[-1], yt[0], yt[-1]
    sx = lambda v: left + (v - xmin) / (xmax - xmin) * pw
    sy = lambda v: top + ph - (v - ymin) / (ymax - ymin) * ph

    out.append(f'<rect x="{left}" y="{top}" width="{pw:.1f}" height="{ph:.1f}" fill="none" stroke="black"/>')
    for t in xt:
        px = sx(t)
        out.append(f'<line x1="{px:.1f}" y1="{top + ph:.1f}" x2="{px:.1f}" y2="{top + ph + 4:.1f}" stroke="black"/>')
        out.append(f'<text x="{px:.1f}" y="{top + ph + 16:.1f}" text-anchor="middle" font-size="10">{_fmt(t)}</text>')
    for t in yt:
        py = sy(t)
        out.append(f'<line x1="{left - 4}" y1="{py:.1f}" x2="{left}" y2="{py:.1f}" stroke="black"/>')
        out.append(f'<text x="{left - 6}" y="{py + 3:.1f}" text-anchor="end" font-size="10">{_fmt(t)}</text>')
    out.append(f'<text x="{left + pw / 2:.1f}" y="{h - 6:.1f}" text-anchor="middle" font-size="11">{escape(panel.xlabel)}</text>')
    out.append(
        f'<text x="12" y="{top + ph / 2:.1f}" text-anchor="middle" font-size="11" '
        f'transform="rotate(-90 12 {top + ph / 2:.1f})">{escape(panel.ylabel)}</text>'
    )
    for s in finite:
        ok = np.isfinite(s.ys)
        pts = [(sx(a), sy(b)) for a, b in zip(s.xs[ok], s.ys[ok])]
        if s.style == "line":
            coords = " ".join(f"{a:.2f},{b:.2f}" for a, b in pts)
            out.append(f'<polyline points="{coords}" fill="none" stroke="{s.color}" stroke-width="1.5"/>')
        else:
            out.extend(
                f'<circle cx="{a:.2f}" cy="{b:.2f}" r="2.5" fill="none" stroke="{s.color}"/>' for a, b in pts
            )
    for i, s in enumerate(panel.series):
        ly = top + 12 + 14 * i
        lx = left + 8
        if s.style == "line":
            out.append(f'<line x1="{lx}" y1="{ly - 4}" x2="{lx + 16}" y2="{ly - 4}" stroke="{s.color}" stroke-width="1.5"/>')
        else:
            out.append(f'<circle cx="{lx + 8}" cy="{ly - 4}" r="2.5" fill="none" stroke="{s.color}"/>')
        out.append(f'<text x="{lx + 22}" y="{ly}" font-size="10">{escape(s.label)}</text>')
    if panel.note:
        out.append(
            f'<text x="{left + pw / 2:.1f}" y="{top + ph / 2:.1f}" text-anchor="middle" '
            f'font-size="12" fill="#999">{escape(panel.note)}</text>'
        )
    out.append("</g>")
    return out


def render(panels: list[Panel], ncols: int = 1, panel_size=(420, 300)) -> str:
    """SVG document with the panels laid out row-major on a grid."""
    ncols = max(1, min(ncols, len(panels) or 1))
    nrows = max(1, -(-len(panels) // ncols))
    w, h = panel_size
    body = []
    for k, panel in enumerate(panels):
        r, c = divmod(k, ncols)
        body.extend(_panel_svg(panel, c * w, r * h, w, h))
    head = (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{ncols * w}" height="{nrows * h}" '
        f'viewBox="0 0 {ncols * w} {nrows * h}" font-family="sans-serif">'
    )
    return "\n".join([head, f'<rect width="100%" height="100%" fill="white"/>', *body, "</svg>"]) + "\n"
