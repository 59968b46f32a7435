"""Minimal deterministic SVG line plots for the emitted CSV artifacts.

No plotting dependency: fixed-size canvas, linear axes with a handful of
ticks, one polyline per series.  Output bytes depend only on the data so the
plots replay byte-identically along with everything else.
"""

import math
from typing import Optional, Sequence

import numpy as np

_WIDTH, _HEIGHT = 640, 420
_MARGIN_L, _MARGIN_R, _MARGIN_T, _MARGIN_B = 62, 16, 34, 46
_COLORS = ("#1f6fb2", "#c94f30", "#3c8f4e", "#7a4fb2", "#b28f1f", "#4fb2a9",
           "#b24f86", "#6f6f6f")


def _ticks(lo: float, hi: float, n: int = 5) -> list:
    if not math.isfinite(lo) or not math.isfinite(hi) or lo == hi:
        return [lo]
    raw = (hi - lo) / n
    mag = 10.0 ** math.floor(math.log10(raw))
    for mult in (1.0, 2.0, 2.5, 5.0, 10.0):
        if raw <= mult * mag:
            step = mult * mag
            break
    first = math.ceil(lo / step) * step
    out = []
    t = first
    while t <= hi + 1e-9 * step:
        out.append(0.0 if abs(t) < 1e-12 * step else t)
        t += step
    return out


def _fmt_tick(v: float) -> str:
    if v == 0:
        return "0"
    if abs(v) >= 1e4 or abs(v) < 1e-3:
        return f"{v:.2e}"
    return f"{v:.6g}"


def line_plot(x: np.ndarray, series: Sequence[np.ndarray], path,
              title: str = "", xlabel: str = "", ylabel: str = "",
              labels: Optional[Sequence[str]] = None) -> None:
    """Write an SVG with one polyline per series over the shared x grid."""
    x = np.asarray(x, dtype=np.float64)
    ys = [np.asarray(s, dtype=np.float64) for s in series]
    finite = np.concatenate([y[np.isfinite(y)] for y in ys if y.size]) if ys else np.array([])
    x_lo, x_hi = float(x.min()), float(x.max())
    if finite.size:
        y_lo, y_hi = float(finite.min()), float(finite.max())
    else:
        y_lo, y_hi = 0.0, 1.0
    if x_hi == x_lo:
        x_hi = x_lo + 1.0
    if y_hi == y_lo:
        y_hi = y_lo + 1.0
    pad = 0.05 * (y_hi - y_lo)
    y_lo, y_hi = y_lo - pad, y_hi + pad

    px_w = _WIDTH - _MARGIN_L - _MARGIN_R
    px_h = _HEIGHT - _MARGIN_T - _MARGIN_B

    def sx(v):
        return _MARGIN_L + (v - x_lo) / (x_hi - x_lo) * px_w

    def sy(v):
        return _MARGIN_T + (y_hi - v) / (y_hi - y_lo) * px_h

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_WIDTH}" height="{_HEIGHT}" '
        f'viewBox="0 0 {_WIDTH} {_HEIGHT}">',
        f'<rect width="{_WIDTH}" height="{_HEIGHT}" fill="white"/>',
        f'<rect x="{_MARGIN_L}" y="{_MARGIN_T}" width="{px_w}" height="{px_h}" '
        f'fill="none" stroke="#333" stroke-width="1"/>',
    ]
    for tv in _ticks(x_lo, x_hi):
        px = sx(tv)
        parts.append(f'<line x1="{px:.2f}" y1="{_MARGIN_T + px_h}" x2="{px:.2f}" '
                     f'y2="{_MARGIN_T + px_h + 5}" stroke="#333"/>')
        parts.append(f'<text x="{px:.2f}" y="{_MARGIN_T + px_h + 18}" '
                     f'font-size="11" text-anchor="middle" font-family="sans-serif">'
                     f'{_fmt_tick(tv)}</text>')
    for tv in _ticks(y_lo, y_hi):
        py = sy(tv)
        parts.append(f'<line x1="{_MARGIN_L - 5}" y1="{py:.2f}" x2="{_MARGIN_L}" '
                     f'y2="{py:.2f}" stroke="#333"/>')
        parts.append(f'<text x="{_MARGIN_L - 8}" y="{py + 4:.2f}" font-size="11" '
                     f'text-anchor="end" font-family="sans-serif">{_fmt_tick(tv)}</text>')
    if title:
        parts.append(f'<text x="{_WIDTH / 2:.0f}" y="20" font-size="14" '
                     f'text-anchor="middle" font-family="sans-serif">{title}</text>')
    if xlabel:
        parts.append(f'<text x="{_MARGIN_L + px_w / 2:.0f}" y="{_HEIGHT - 10}" '
                     f'font-size="12" text-anchor="middle" font-family="sans-serif">'
                     f'{xlabel}</text>')
    if ylabel:
        cy = _MARGIN_T + px_h / 2
        parts.append(f'<text x="16" y="{cy:.0f}" font-size="12" text-anchor="middle" '
                     f'font-family="sans-serif" transform="rotate(-90 16 {cy:.0f})">'
                     f'{ylabel}</text>')

    for i, y in enumerate(ys):
        color = _COLORS[i % len(_COLORS)]
        pts = []
        for xv, yv in zip(x, y):
            if np.isfinite(yv):
                pts.append(f"{sx(xv):.2f},{sy(yv):.2f}")
        if pts:
            parts.append(f'<polyline points="{" ".join(pts)}" fill="none" '
                         f'stroke="{color}" stroke-width="1.2"/>')
        if labels is not None and i < len(labels):
            ly = _MARGIN_T + 16 + 15 * i
            parts.append(f'<line x1="{_MARGIN_L + px_w - 120}" y1="{ly - 4}" '
                         f'x2="{_MARGIN_L + px_w - 100}" y2="{ly - 4}" '
                         f'stroke="{color}" stroke-width="1.2"/>')
            parts.append(f'<text x="{_MARGIN_L + px_w - 94}" y="{ly}" font-size="11" '
                         f'font-family="sans-serif">{labels[i]}</text>')
    parts.append("</svg>")
    with open(path, "w", newline="") as fh:
        fh.write("\n".join(parts) + "\n")
