"""Standalone SVG line charts of training logs.

One ``<polyline>`` per series; the segment leading into a record flagged
``diverged`` is drawn as a separate dashed ``<line>``.
"""

import math
import os
from dataclasses import dataclass
from xml.sax.saxutils import escape

from samedge.harness.logs import LogFormatError, read_columns

PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
           "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"]
WIDTH, HEIGHT = 720, 440
MARGIN = dict(left=70, right=190, top=20, bottom=50)


class PlotError(ValueError):
    pass


@dataclass(frozen=True)
class PlotSpec:
    logs: tuple
    series: tuple
    yscale: str = "linear"
    output: str = "plot.svg"


@dataclass
class _Series:
    label: str
    xs: list
    ys: list
    diverged_tail: bool


def _load_series(spec):
    out = []
    multi = len(spec.logs) > 1
    for path in spec.logs:
        head, rows = read_columns(path)
        if not rows:
            raise PlotError(f"{path}: log has no records")
        missing = [s for s in spec.series if s not in head]
        if missing:
            raise PlotError(f"{path}: unknown series {', '.join(missing)}")
        xi, fi = head.index("wall_s"), head.index("flags")
        diverged = "diverged" in rows[-1][fi].split("|")
        run = os.path.splitext(os.path.basename(path))[0]
        for name in spec.series:
            ci = head.index(name)
            try:
                xs = [float(r[xi]) for r in rows]
                ys = [float(r[ci]) for r in rows]
            except (ValueError, IndexError) as exc:
                raise LogFormatError(f"{path}: {exc}") from None
            out.append(_Series(f"{run}:{name}" if multi else name, xs, ys, diverged))
    return out


def _usable(y, log):
    return math.isfinite(y) and (y > 0 or not log)


def _ticks(lo, hi, log, count=5):
    if log:
        a, b = math.floor(math.log10(lo)), math.ceil(math.log10(hi))
        step = max(1, (b - a) // count)
        return [10.0 ** e for e in range(a, b + 1, step)]
    if hi == lo:
        return [lo]
    return [lo + (hi - lo) * i / (count - 1) for i in range(count)]


def render(spec):
    """SVG document text for ``spec``."""
    if spec.yscale not in ("linear", "log"):
        raise PlotError(f"yscale must be linear or log, got {spec.yscale!r}")
    log = spec.yscale == "log"
    series = _load_series(spec)
    pts = [(x, y) for s in series for x, y in zip(s.xs, s.ys)
           if math.isfinite(x) and _usable(y, log)]
    if not pts:
        raise PlotError("no finite points to plot")
    x0, x1 = min(p[0] for p in pts), max(p[0] for p in pts)
    y0, y1 = min(p[1] for p in pts), max(p[1] for p in pts)
    if x1 == x0:
        x1 = x0 + 1.0
    if log:
        ly0, ly1 = math.log10(y0), math.log10(y1)
        if ly1 == ly0:
            ly0, ly1 = ly0 - 0.5, ly1 + 0.5
        y0, y1 = 10.0 ** ly0, 10.0 ** ly1
    elif y1 == y0:
        y0, y1 = y0 - 1.0, y1 + 1.0

    left, top = MARGIN["left"], MARGIN["top"]
    pw = WIDTH - MARGIN["left"] - MARGIN["right"]
    ph = HEIGHT - MARGIN["top"] - MARGIN["bottom"]

    def sx(x):
        return left + pw * (x - x0) / (x1 - x0)

    def sy(y):
        if log:
            frac = (math.log10(y) - math.log10(y0)) / (math.log10(y1) - math.log10(y0))
        else:
            frac = (y - y0) / (y1 - y0)
        return top + ph * (1.0 - frac)

    parts = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">',
        f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="white" stroke="black"/>',
    ]
    for tx in _ticks(x0, x1, False):
        parts.append(f'<text x="{sx(tx):.2f}" y="{top + ph + 16}" '
                     f'text-anchor="middle">{tx:.4g}</text>')
    for ty in _ticks(y0, y1, log):
        if y0 <= ty <= y1:
            parts.append(f'<text x="{left - 6}" y="{sy(ty) + 4:.2f}" '
                         f'text-anchor="end">{ty:.4g}</text>')
    parts.append(f'<text x="{left + pw / 2}" y="{HEIGHT - 10}" text-anchor="middle">wall_s</text>')

    for i, s in enumerate(series):
        color = PALETTE[i % len(PALETTE)]
        coords = [(sx(x), sy(y)) for x, y in zip(s.xs, s.ys)
                  if math.isfinite(x) and _usable(y, log)]
        tail = None
        if s.diverged_tail and len(coords) >= 2 and _usable(s.ys[-1], log):
            tail = (coords[-2], coords[-1])
            coords = coords[:-1]
        text = " ".join(f"{x:.2f},{y:.2f}" for x, y in coords)
        parts.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" '
                     f'points="{text}"><title>{escape(s.label)}</title></polyline>')
        if tail:
            (ax, ay), (bx, by) = tail
            parts.append(f'<line x1="{ax:.2f}" y1="{ay:.2f}" x2="{bx:.2f}" y2="{by:.2f}" '
                         f'stroke="{color}" stroke-width="1.5" stroke-dasharray="5,3"/>')
        ly = top + 14 + 16 * i
        lx = left + pw + 12
        parts.append(f'<g class="legend"><line x1="{lx}" y1="{ly - 4}" x2="{lx + 20}" '
                     f'y2="{ly - 4}" stroke="{color}" stroke-width="2"/>'
                     f'<text x="{lx + 26}" y="{ly}">{escape(s.label)}</text></g>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def plot(spec):
    """Render and write ``spec.output``; nothing is written if rendering fails."""
    text = render(spec)
    with open(spec.output, "w") as fh:
        fh.write(text)
    return spec.output
