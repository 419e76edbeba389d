"""Minimal static SVG line plots, each paired with CSV and gnuplot data files."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
           "#e377c2", "#17becf", "#7f7f7f", "#bcbd22", "#393b79", "#637939")

WIDTH, HEIGHT = 720, 480
MARGIN = dict(left=70, right=190, top=40, bottom=55)


@dataclass
class Series:
    label: str
    x: np.ndarray
    y: np.ndarray
    lower: np.ndarray | None = None
    upper: np.ndarray | None = None


def ecdf(values) -> tuple[np.ndarray, np.ndarray]:
    """Step polyline of the empirical CDF, starting at 0 and ending at 1."""
    v = np.sort(np.asarray(values, dtype=float))
    if v.size == 0:
        raise ValueError("empirical CDF of an empty sample")
    n = v.size
    xs = np.repeat(v, 2)
    ys = np.empty(2 * n)
    ys[0::2] = np.arange(n) / n
    ys[1::2] = np.arange(1, n + 1) / n
    return xs, ys


def _nice_ticks(lo: float, hi: float, n: int = 6) -> list[float]:
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / n
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 2.5, 5, 10) if m * mag >= raw), default=10 * mag)
    start = math.ceil(lo / step) * step
    ticks = []
    t = start
    while t <= hi + 1e-9 * step:
        ticks.append(round(t, 10))
        t += step
    return ticks


def _fmt(v: float) -> str:
    return f"{v:g}"


def line_plot(series: list[Series], path, title: str, xlabel: str, ylabel: str,
              ylim: tuple[float, float] | None = None) -> Path:
    """Write ``path`` (SVG) plus ``.csv`` and ``.dat`` siblings with the same data."""
    if not series:
        raise ValueError("nothing to plot")
    path = Path(path)
    finite = lambda a: np.asarray(a, dtype=float)[np.isfinite(np.asarray(a, dtype=float))]
    xs = np.concatenate([finite(s.x) for s in series])
    ys = np.concatenate([finite(s.y) for s in series]
                        + [finite(s.lower) for s in series if s.lower is not None]
                        + [finite(s.upper) for s in series if s.upper is not None])
    if xs.size == 0:
        raise ValueError("no finite data to plot")
    x0, x1 = float(xs.min()), float(xs.max())
    if x1 == x0:
        x0, x1 = x0 - 1.0, x1 + 1.0
    if ylim is None:
        y0, y1 = (float(ys.min()), float(ys.max())) if ys.size else (0.0, 1.0)
        if y1 == y0:
            y0, y1 = y0 - 1.0, y1 + 1.0
        pad = 0.05 * (y1 - y0)
        y0, y1 = y0 - pad, y1 + pad
    else:
        y0, y1 = ylim

    pw = WIDTH - MARGIN["left"] - MARGIN["right"]
    ph = HEIGHT - MARGIN["top"] - MARGIN["bottom"]
    sx = lambda x: MARGIN["left"] + (x - x0) / (x1 - x0) * pw
    sy = lambda y: MARGIN["top"] + (1.0 - (y - y0) / (y1 - y0)) * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
           f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
           f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
           f'<text x="{WIDTH / 2:.1f}" y="22" text-anchor="middle" font-size="14">{escape(title)}</text>',
           f'<rect x="{MARGIN["left"]}" y="{MARGIN["top"]}" width="{pw}" height="{ph}" '
           f'fill="none" stroke="black"/>']
    for t in _nice_ticks(x0, x1):
        X = sx(t)
        out.append(f'<line x1="{X:.1f}" y1="{MARGIN["top"]}" x2="{X:.1f}" y2="{MARGIN["top"] + ph}" '
                   f'stroke="#ddd"/>')
        out.append(f'<text x="{X:.1f}" y="{MARGIN["top"] + ph + 16}" text-anchor="middle">{_fmt(t)}</text>')
    for t in _nice_ticks(y0, y1):
        Y = sy(t)
        out.append(f'<line x1="{MARGIN["left"]}" y1="{Y:.1f}" x2="{MARGIN["left"] + pw}" y2="{Y:.1f}" '
                   f'stroke="#ddd"/>')
        out.append(f'<text x="{MARGIN["left"] - 6}" y="{Y + 4:.1f}" text-anchor="end">{_fmt(t)}</text>')
    out.append(f'<text x="{MARGIN["left"] + pw / 2:.1f}" y="{HEIGHT - 15}" '
               f'text-anchor="middle">{escape(xlabel)}</text>')
    out.append(f'<text transform="translate(18,{MARGIN["top"] + ph / 2:.1f}) rotate(-90)" '
               f'text-anchor="middle">{escape(ylabel)}</text>')

    for i, s in enumerate(series):
        color = PALETTE[i % len(PALETTE)]
        if s.lower is not None and s.upper is not None:
            ok = np.isfinite(s.x) & np.isfinite(s.lower) & np.isfinite(s.upper)
            top = [f"{sx(x):.2f},{sy(y):.2f}" for x, y in zip(s.x[ok], s.upper[ok])]
            bot = [f"{sx(x):.2f},{sy(y):.2f}" for x, y in zip(s.x[ok][::-1], s.lower[ok][::-1])]
            if top:
                out.append(f'<polygon points="{" ".join(top + bot)}" fill="{color}" fill-opacity="0.2" '
                           f'stroke="none"/>')
        ok = np.isfinite(s.x) & np.isfinite(s.y)
        pts = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in zip(s.x[ok], s.y[ok]))
        out.append(f'<polyline class="series" data-label="{escape(s.label)}" points="{pts}" '
                   f'fill="none" stroke="{color}" stroke-width="1.6"/>')
        ly = MARGIN["top"] + 14 + 18 * i
        lx = MARGIN["left"] + pw + 12
        out.append(f'<line x1="{lx}" y1="{ly - 4}" x2="{lx + 22}" y2="{ly - 4}" stroke="{color}" '
                   f'stroke-width="2"/>')
        out.append(f'<text x="{lx + 28}" y="{ly}">{escape(s.label)}</text>')
    out.append("</svg>")
    path.write_text("\n".join(out) + "\n")
    write_series_csv(series, path.with_suffix(".csv"))
    write_gnuplot(series, path.with_suffix(".dat"))
    return path


def write_series_csv(series: list[Series], path) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(("series", "x", "y", "lower", "upper"))
        for s in series:
            for i in range(len(s.x)):
                w.writerow((s.label, repr(float(s.x[i])), repr(float(s.y[i])),
                            "" if s.lower is None else repr(float(s.lower[i])),
                            "" if s.upper is None else repr(float(s.upper[i]))))
    return path


def read_series_csv(path) -> dict[str, tuple[np.ndarray, np.ndarray]]:
    data: dict[str, tuple[list, list]] = {}
    with Path(path).open() as fh:
        for row in csv.DictReader(fh):
            xs, ys = data.setdefault(row["series"], ([], []))
            xs.append(float(row["x"]))
            ys.append(float(row["y"]))
    return {k: (np.array(x), np.array(y)) for k, (x, y) in data.items()}


def write_gnuplot(series: list[Series], path) -> Path:
    """One data block per series, separated by two blank lines (gnuplot ``index``)."""
    path = Path(path)
    with path.open("w") as fh:
        for i, s in enumerate(series):
            if i:
                fh.write("\n\n")
            fh.write(f"# {s.label}\n")
            for x, y in zip(s.x, s.y):
                fh.write(f"{float(x)!r} {float(y)!r}\n")
    return path
