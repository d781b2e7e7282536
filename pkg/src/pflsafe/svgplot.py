"""Minimal native SVG emission: line charts and grouped box plots.

Hand-rolled so the toolchain has no plotting dependency; output is
deterministic (fixed float formatting, no timestamps) which lets callers
diff rerun artefacts byte for byte.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

_PALETTE = ("#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b")


def _fmt(x: float) -> str:
    return format(float(x), ".6g")


def _esc(text: str) -> str:
    return (text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;"))


@dataclass(frozen=True)
class BoxStats:
    """Five-number summary with 1.5*IQR whiskers (capped to the data)."""

    mean: float
    q1: float
    median: float
    q3: float
    whisker_lo: float
    whisker_hi: float
    minimum: float
    maximum: float
    n: int


def _nice_ticks(lo: float, hi: float, target: int = 6) -> list[float]:
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / target
    mag = 10.0 ** math.floor(math.log10(raw))
    for mult in (1.0, 2.0, 2.5, 5.0, 10.0):
        if raw <= mult * mag:
            step = mult * mag
            break
    first = math.ceil(lo / step) * step
    ticks = []
    value = first
    while value <= hi + 1e-12 * step:
        ticks.append(round(value, 12))
        value += step
    return ticks


class _Canvas:
    def __init__(self, width: int, height: int):
        self.width = width
        self.height = height
        self.parts: list[str] = []

    def line(self, x1, y1, x2, y2, stroke="#000", width=1.0, dash=None):
        dash_attr = f' stroke-dasharray="{dash}"' if dash else ""
        self.parts.append(
            f'<line x1="{_fmt(x1)}" y1="{_fmt(y1)}" x2="{_fmt(x2)}" '
            f'y2="{_fmt(y2)}" stroke="{stroke}" stroke-width="{_fmt(width)}"'
            f'{dash_attr}/>')

    def rect(self, x, y, w, h, fill="none", stroke="#000", width=1.0):
        self.parts.append(
            f'<rect x="{_fmt(x)}" y="{_fmt(y)}" width="{_fmt(w)}" '
            f'height="{_fmt(h)}" fill="{fill}" stroke="{stroke}" '
            f'stroke-width="{_fmt(width)}"/>')

    def polyline(self, points: Iterable[tuple[float, float]], stroke, width=1.5):
        pts = " ".join(f"{_fmt(x)},{_fmt(y)}" for x, y in points)
        self.parts.append(
            f'<polyline points="{pts}" fill="none" stroke="{stroke}" '
            f'stroke-width="{_fmt(width)}"/>')

    def text(self, x, y, s, size=11, anchor="middle", rotate=None, fill="#000"):
        transform = (f' transform="rotate({_fmt(rotate)} {_fmt(x)} {_fmt(y)})"'
                     if rotate is not None else "")
        self.parts.append(
            f'<text x="{_fmt(x)}" y="{_fmt(y)}" font-size="{size}" '
            f'font-family="sans-serif" text-anchor="{anchor}" '
            f'fill="{fill}"{transform}>{_esc(s)}</text>')

    def star(self, x, y, r, fill):
        pts = []
        for i in range(10):
            radius = r if i % 2 == 0 else 0.4 * r
            angle = -math.pi / 2 + i * math.pi / 5
            pts.append((x + radius * math.cos(angle), y + radius * math.sin(angle)))
        path = " ".join(f"{_fmt(px)},{_fmt(py)}" for px, py in pts)
        self.parts.append(
            f'<polygon points="{path}" fill="{fill}" stroke="#000" '
            f'stroke-width="0.6"/>')

    def render(self) -> str:
        body = "\n".join(self.parts)
        return (
            '<?xml version="1.0" encoding="UTF-8"?>\n'
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{self.width}" '
            f'height="{self.height}" viewBox="0 0 {self.width} {self.height}">\n'
            f'<rect width="{self.width}" height="{self.height}" fill="#fff"/>\n'
            f"{body}\n</svg>\n")


def line_chart(series: Mapping[str, tuple[Sequence[float], Sequence[float]]],
               title: str = "", xlabel: str = "", ylabel: str = "",
               width: int = 760, height: int = 480,
               hlines: Mapping[str, float] | None = None) -> str:
    """Render one or more (x, y) series as an SVG line chart."""
    margin_l, margin_r, margin_t, margin_b = 70, 20, 40, 55
    plot_w = width - margin_l - margin_r
    plot_h = height - margin_t - margin_b

    xs = [float(x) for _, (xv, _) in series.items() for x in xv]
    ys = [float(y) for _, (_, yv) in series.items() for y in yv]
    if hlines:
        ys.extend(float(v) for v in hlines.values())
    if not xs:
        raise ValueError("line_chart: no data")
    x_lo, x_hi = min(xs), max(xs)
    y_lo, y_hi = min(ys + [0.0]), max(ys)
    if x_hi == x_lo:
        x_hi = x_lo + 1.0
    if y_hi == y_lo:
        y_hi = y_lo + 1.0
    pad = 0.05 * (y_hi - y_lo)
    y_hi += pad

    def sx(x): return margin_l + (x - x_lo) / (x_hi - x_lo) * plot_w
    def sy(y): return margin_t + plot_h - (y - y_lo) / (y_hi - y_lo) * plot_h

    c = _Canvas(width, height)
    c.rect(margin_l, margin_t, plot_w, plot_h, stroke="#444")
    for tick in _nice_ticks(x_lo, x_hi):
        c.line(sx(tick), margin_t + plot_h, sx(tick), margin_t + plot_h + 4, "#444")
        c.text(sx(tick), margin_t + plot_h + 16, _fmt(tick), size=10)
    for tick in _nice_ticks(y_lo, y_hi):
        c.line(margin_l - 4, sy(tick), margin_l, sy(tick), "#444")
        c.line(margin_l, sy(tick), margin_l + plot_w, sy(tick), "#ddd", 0.5)
        c.text(margin_l - 8, sy(tick) + 3.5, _fmt(tick), size=10, anchor="end")
    if hlines:
        for label, value in hlines.items():
            c.line(margin_l, sy(value), margin_l + plot_w, sy(value),
                   "#888", 1.0, dash="5,4")
            c.text(margin_l + plot_w - 4, sy(value) - 4, label, size=10,
                   anchor="end", fill="#555")
    for idx, (label, (xv, yv)) in enumerate(series.items()):
        color = _PALETTE[idx % len(_PALETTE)]
        c.polyline([(sx(float(x)), sy(float(y))) for x, y in zip(xv, yv)],
                   stroke=color)
        c.text(margin_l + plot_w - 4, margin_t + 14 + 14 * idx, label,
               size=11, anchor="end", fill=color)
    if title:
        c.text(width / 2, 22, title, size=13)
    if xlabel:
        c.text(margin_l + plot_w / 2, height - 12, xlabel, size=11)
    if ylabel:
        c.text(18, margin_t + plot_h / 2, ylabel, size=11, rotate=-90)
    return c.render()


def grouped_boxplot(groups: Sequence[str],
                    boxes: Mapping[str, Sequence[BoxStats | None]],
                    stars: Mapping[str, Sequence[float | None]] | None = None,
                    title: str = "", ylabel: str = "",
                    width: int = 1000, height: int = 520) -> str:
    """Grouped box-and-whisker plot with optional per-group star markers.

    ``boxes`` maps a series label to one BoxStats per group; ``stars`` maps
    a series label to one scalar per group (drawn as a star).
    """
    margin_l, margin_r, margin_t, margin_b = 70, 20, 46, 110
    plot_w = width - margin_l - margin_r
    plot_h = height - margin_t - margin_b

    values: list[float] = []
    for stats_row in boxes.values():
        for st in stats_row:
            if st is not None:
                values.extend([st.whisker_lo, st.whisker_hi, st.minimum,
                               st.maximum])
    if stars:
        for row in stars.values():
            values.extend(float(v) for v in row if v is not None)
    if not values:
        raise ValueError("grouped_boxplot: no data")
    y_lo = 0.0
    y_hi = max(values) * 1.06

    def sy(y): return margin_t + plot_h - (y - y_lo) / (y_hi - y_lo) * plot_h

    n_groups = len(groups)
    n_series = len(boxes)
    group_w = plot_w / n_groups
    box_w = min(16.0, group_w / (n_series + 2))

    c = _Canvas(width, height)
    c.rect(margin_l, margin_t, plot_w, plot_h, stroke="#444")
    for tick in _nice_ticks(y_lo, y_hi):
        c.line(margin_l - 4, sy(tick), margin_l, sy(tick), "#444")
        c.line(margin_l, sy(tick), margin_l + plot_w, sy(tick), "#ddd", 0.5)
        c.text(margin_l - 8, sy(tick) + 3.5, _fmt(tick), size=10, anchor="end")

    for g_idx, group in enumerate(groups):
        center = margin_l + (g_idx + 0.5) * group_w
        c.text(center, margin_t + plot_h + 14, group, size=10, anchor="end",
               rotate=-40)
        offsets = [(s_idx - (n_series - 1) / 2) * (box_w + 4)
                   for s_idx in range(n_series)]
        for s_idx, (label, stats_row) in enumerate(boxes.items()):
            st = stats_row[g_idx]
            if st is None:
                continue
            x = center + offsets[s_idx]
            color = _PALETTE[s_idx % len(_PALETTE)]
            c.line(x, sy(st.whisker_lo), x, sy(st.q1), color)
            c.line(x, sy(st.q3), x, sy(st.whisker_hi), color)
            c.line(x - box_w / 3, sy(st.whisker_lo), x + box_w / 3,
                   sy(st.whisker_lo), color)
            c.line(x - box_w / 3, sy(st.whisker_hi), x + box_w / 3,
                   sy(st.whisker_hi), color)
            c.rect(x - box_w / 2, sy(st.q3), box_w, sy(st.q1) - sy(st.q3),
                   fill="#fff", stroke=color, width=1.4)
            c.line(x - box_w / 2, sy(st.median), x + box_w / 2, sy(st.median),
                   color, 1.6)
        if stars:
            for s_idx, (label, row) in enumerate(stars.items()):
                value = row[g_idx]
                if value is None:
                    continue
                x = center + offsets[s_idx % max(n_series, 1)]
                c.star(x, sy(float(value)), 5.0,
                       _PALETTE[s_idx % len(_PALETTE)])

    for s_idx, label in enumerate(boxes):
        color = _PALETTE[s_idx % len(_PALETTE)]
        x = margin_l + 10 + 150 * s_idx
        c.rect(x, 14, 12, 10, fill="#fff", stroke=color, width=1.4)
        c.text(x + 18, 23, label, size=11, anchor="start", fill=color)
    if title:
        c.text(width / 2, 40, title, size=13)
    if ylabel:
        c.text(18, margin_t + plot_h / 2, ylabel, size=11, rotate=-90)
    return c.render()
