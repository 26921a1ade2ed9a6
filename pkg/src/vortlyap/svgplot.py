"""Minimal self-contained SVG line plots of monitor CSV files."""

from __future__ import annotations

import csv
import math
from pathlib import Path
from xml.sax.saxutils import escape

__all__ = ["read_columns", "render_svg", "plot_csv"]

PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22"]
WIDTH, HEIGHT = 720, 440
MARGIN = (60, 170, 30, 50)  # left, right, top, bottom


def _float(s: str) -> float | None:
    try:
        v = float(s)
    except ValueError:
        return None
    return v if math.isfinite(v) else None


def read_columns(path: str | Path) -> tuple[list[str], dict[str, list[float | None]]]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError(f"{path}: empty CSV")
    header, body = rows[0], rows[1:]
    cols = {h: [_float(r[i]) if i < len(r) else None for r in body] for i, h in enumerate(header)}
    return header, cols


def _ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi == lo:
        return [lo]
    return [lo + (hi - lo) * i / (n - 1) for i in range(n)]


def render_svg(x: list[float], series: dict[str, list[float | None]], xlabel: str, log_y: bool = False) -> str:
    """One polyline per series against ``x``; nonpositive values are dropped in log mode."""
    def tf(v):
        if v is None:
            return None
        if log_y:
            return math.log10(v) if v > 0 else None
        return v

    ys = {k: [tf(v) for v in vals] for k, vals in series.items()}
    finite = [v for vals in ys.values() for v in vals if v is not None]
    xs = [v for v in x if v is not None]
    if not finite or not xs:
        raise ValueError("nothing to plot")
    x0, x1 = min(xs), max(xs)
    y0, y1 = min(finite), max(finite)
    if x1 == x0:
        x1 = x0 + 1.0
    if y1 == y0:
        y0, y1 = y0 - 0.5, y1 + 0.5
    left, right, top, bottom = MARGIN
    pw, ph = WIDTH - left - right, HEIGHT - top - bottom

    def px(v):
        return left + (v - x0) / (x1 - x0) * pw

    def py(v):
        return top + (1 - (v - y0) / (y1 - y0)) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
    ]
    for t in _ticks(x0, x1):
        out.append(f'<text x="{px(t):.2f}" y="{top + ph + 16}" font-size="11" text-anchor="middle">{t:.3g}</text>')
    for t in _ticks(y0, y1):
        label = f"1e{t:.2g}" if log_y else f"{t:.3g}"
        out.append(f'<text x="{left - 6}" y="{py(t) + 4:.2f}" font-size="11" text-anchor="end">{label}</text>')
    out.append(f'<text x="{left + pw / 2}" y="{HEIGHT - 10}" font-size="12" text-anchor="middle">{escape(xlabel)}</text>')
    for i, (name, vals) in enumerate(ys.items()):
        color = PALETTE[i % len(PALETTE)]
        pts = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in zip(x, vals) if a is not None and b is not None)
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{pts}"><title>{escape(name)}</title></polyline>')
        ly = top + 14 + 16 * i
        out.append(f'<line x1="{left + pw + 10}" y1="{ly - 4}" x2="{left + pw + 30}" y2="{ly - 4}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{left + pw + 35}" y="{ly}" font-size="11">{escape(name)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def plot_csv(csv_path: str | Path, out_path: str | Path, columns: list[str] | None = None, x: str | None = None, log_y: bool = False) -> list[str]:
    """Plot numeric columns of ``csv_path``; returns the names drawn."""
    header, cols = read_columns(csv_path)
    xname = x or header[0]
    if xname not in cols:
        raise ValueError(f"no column {xname!r}")
    if columns:
        missing = [c for c in columns if c not in cols]
        if missing:
            raise ValueError(f"no column {missing[0]!r}")
        names = columns
    else:
        skip = {xname, "step", "sample", "seed", "j"}
        names = [h for h in header if h not in skip and any(v is not None for v in cols[h])]
    if not names:
        raise ValueError("no numeric columns to plot")
    svg = render_svg(cols[xname], {n: cols[n] for n in names}, xname, log_y=log_y)
    Path(out_path).write_text(svg)
    return names
