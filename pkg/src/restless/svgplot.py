"""Tiny deterministic SVG plotting.

Just enough for the CLI figures: line and marker series with optional error
bars, bar series for histograms, linear or logarithmic axes, a legend and
axis labels.  Output contains no timestamps or random identifiers, so a rerun
produces byte-identical files.  Every figure the CLI writes is paired with a
CSV holding the same numbers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf")

_MARGIN_L, _MARGIN_R, _MARGIN_T, _MARGIN_B = 64.0, 16.0, 34.0, 46.0


@dataclass
class Series:
    """One plottable data series."""

    x: Sequence[float]
    y: Sequence[float]
    label: str = ""
    color: Optional[str] = None
    line: bool = True
    markers: bool = False
    yerr: Optional[Sequence[float]] = None
    bars: bool = False


def _finite_xy(series: Series):
    x = np.asarray(series.x, dtype=np.float64).reshape(-1)
    y = np.asarray(series.y, dtype=np.float64).reshape(-1)
    if len(x) != len(y):
        raise ValueError("series x and y lengths differ")
    err = None
    if series.yerr is not None:
        err = np.asarray(series.yerr, dtype=np.float64).reshape(-1)
        if len(err) != len(x):
            raise ValueError("series error length differs from data length")
    return x, y, err


def _data_range(values, log: bool):
    vals = values[np.isfinite(values)]
    if log:
        vals = vals[vals > 0]
    if len(vals) == 0:
        raise ValueError("no plottable values on an axis")
    lo, hi = float(vals.min()), float(vals.max())
    if lo == hi:
        pad = abs(lo) * 0.1 or 1.0
        lo, hi = lo - pad, hi + pad
        if log:
            lo = max(lo, hi / 100.0)
    return lo, hi


def _nice_step(span: float) -> float:
    raw = span / 5.0
    mag = 10.0 ** math.floor(math.log10(raw))
    for mult in (1.0, 2.0, 5.0):
        if raw <= mult * mag:
            return mult * mag
    return 10.0 * mag


def _linear_ticks(lo: float, hi: float):
    step = _nice_step(hi - lo)
    first = math.ceil(lo / step) * step
    ticks = []
    t = first
    while t <= hi + 1e-9 * step:
        ticks.append(0.0 if abs(t) < 1e-12 * step else t)
        t += step
    return ticks


def _log_ticks(lo: float, hi: float):
    ticks = []
    p = math.floor(math.log10(lo))
    while 10.0**p <= hi * (1 + 1e-9):
        if 10.0**p >= lo * (1 - 1e-9):
            ticks.append(10.0**p)
        p += 1
    if len(ticks) < 2:
        ticks = [lo, hi]
    return ticks


def _fmt(v: float) -> str:
    return f"{v:.6g}"


class _Frame:
    def __init__(self, xlo, xhi, ylo, yhi, width, height, logx, logy):
        self.logx, self.logy = logx, logy
        self.xlo = math.log10(xlo) if logx else xlo
        self.xhi = math.log10(xhi) if logx else xhi
        self.ylo = math.log10(ylo) if logy else ylo
        self.yhi = math.log10(yhi) if logy else yhi
        self.px0, self.px1 = _MARGIN_L, width - _MARGIN_R
        self.py0, self.py1 = height - _MARGIN_B, _MARGIN_T

    def x(self, v):
        t = math.log10(v) if self.logx else v
        frac = (t - self.xlo) / (self.xhi - self.xlo)
        return self.px0 + frac * (self.px1 - self.px0)

    def y(self, v):
        t = math.log10(v) if self.logy else v
        frac = (t - self.ylo) / (self.yhi - self.ylo)
        return self.py0 + frac * (self.py1 - self.py0)


def render_plot(
    path,
    series: Sequence[Series],
    title: str = "",
    xlabel: str = "",
    ylabel: str = "",
    logx: bool = False,
    logy: bool = False,
    width: int = 640,
    height: int = 440,
) -> None:
    """Write an SVG figure with the given series."""
    if not series:
        raise ValueError("need at least one series")
    parsed = [_finite_xy(s) for s in series]
    all_x = np.concatenate([p[0] for p in parsed])
    ys = []
    for (x, y, err) in parsed:
        ys.append(y)
        if err is not None:
            ys.append(y - err)
            ys.append(y + err)
    all_y = np.concatenate(ys)
    xlo, xhi = _data_range(all_x, logx)
    ylo, yhi = _data_range(all_y, logy)
    if not logx:
        pad = 0.04 * (xhi - xlo) or 1.0
        xlo, xhi = xlo - pad, xhi + pad
    else:
        xlo, xhi = xlo / 1.3, xhi * 1.3
    if not logy:
        pad = 0.06 * (yhi - ylo) or 1.0
        ylo, yhi = ylo - pad, yhi + pad
    else:
        ylo, yhi = ylo / 1.3, yhi * 1.3
    frame = _Frame(xlo, xhi, ylo, yhi, width, height, logx, logy)

    out = []
    out.append(
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">'
    )
    out.append(f'<rect width="{width}" height="{height}" fill="white"/>')
    xticks = _log_ticks(xlo, xhi) if logx else _linear_ticks(xlo, xhi)
    yticks = _log_ticks(ylo, yhi) if logy else _linear_ticks(ylo, yhi)
    for t in xticks:
        px = frame.x(t)
        out.append(
            f'<line x1="{px:.2f}" y1="{frame.py0:.2f}" x2="{px:.2f}" y2="{frame.py1:.2f}" '
            f'stroke="#dddddd" stroke-width="1"/>'
        )
        out.append(
            f'<text x="{px:.2f}" y="{frame.py0 + 16:.2f}" text-anchor="middle">{_fmt(t)}</text>'
        )
    for t in yticks:
        py = frame.y(t)
        out.append(
            f'<line x1="{frame.px0:.2f}" y1="{py:.2f}" x2="{frame.px1:.2f}" y2="{py:.2f}" '
            f'stroke="#dddddd" stroke-width="1"/>'
        )
        out.append(
            f'<text x="{frame.px0 - 6:.2f}" y="{py + 4:.2f}" text-anchor="end">{_fmt(t)}</text>'
        )
    out.append(
        f'<rect x="{frame.px0:.2f}" y="{frame.py1:.2f}" width="{frame.px1 - frame.px0:.2f}" '
        f'height="{frame.py0 - frame.py1:.2f}" fill="none" stroke="black" stroke-width="1"/>'
    )

    for idx, (spec, (x, y, err)) in enumerate(zip(series, parsed)):
        color = spec.color or PALETTE[idx % len(PALETTE)]
        ok = np.isfinite(x) & np.isfinite(y)
        if logx:
            ok &= x > 0
        if logy:
            ok &= y > 0
        if spec.bars:
            widths = np.diff(np.sort(x[ok]))
            bar_w = 0.8 * (widths.min() if len(widths) else 1.0)
            base = frame.y(max(ylo, 0.0) if not logy else ylo)
            for xv, yv in zip(x[ok], y[ok]):
                px = frame.x(xv)
                py = frame.y(yv)
                half = abs(frame.x(xv + bar_w / 2) - px)
                out.append(
                    f'<rect x="{px - half:.2f}" y="{min(py, base):.2f}" '
                    f'width="{2 * half:.2f}" height="{abs(base - py):.2f}" '
                    f'fill="{color}" fill-opacity="0.7"/>'
                )
            continue
        if err is not None:
            for xv, yv, ev in zip(x[ok], y[ok], err[ok]):
                if not np.isfinite(ev):
                    continue
                px = frame.x(xv)
                y_lo, y_hi = yv - ev, yv + ev
                if logy:
                    y_lo = max(y_lo, ylo)
                out.append(
                    f'<line x1="{px:.2f}" y1="{frame.y(y_lo):.2f}" x2="{px:.2f}" '
                    f'y2="{frame.y(y_hi):.2f}" stroke="{color}" stroke-width="1"/>'
                )
        if spec.line:
            segment = []
            chunks = []
            for xv, yv, good in zip(x, y, ok):
                if good:
                    segment.append(f"{frame.x(xv):.2f},{frame.y(yv):.2f}")
                elif segment:
                    chunks.append(segment)
                    segment = []
            if segment:
                chunks.append(segment)
            for seg in chunks:
                if len(seg) >= 2:
                    out.append(
                        f'<polyline points="{" ".join(seg)}" fill="none" '
                        f'stroke="{color}" stroke-width="1.5"/>'
                    )
        if spec.markers or not spec.line:
            for xv, yv in zip(x[ok], y[ok]):
                out.append(
                    f'<circle cx="{frame.x(xv):.2f}" cy="{frame.y(yv):.2f}" r="2.5" '
                    f'fill="{color}"/>'
                )

    if title:
        out.append(
            f'<text x="{width / 2:.2f}" y="20" text-anchor="middle" font-size="14">{_escape(title)}</text>'
        )
    if xlabel:
        out.append(
            f'<text x="{(frame.px0 + frame.px1) / 2:.2f}" y="{height - 10:.2f}" '
            f'text-anchor="middle">{_escape(xlabel)}</text>'
        )
    if ylabel:
        out.append(
            f'<text x="16" y="{(frame.py0 + frame.py1) / 2:.2f}" text-anchor="middle" '
            f'transform="rotate(-90 16 {(frame.py0 + frame.py1) / 2:.2f})">{_escape(ylabel)}</text>'
        )
    labelled = [s for s in series if s.label]
    if labelled:
        ly = frame.py1 + 12
        for idx, spec in enumerate(series):
            if not spec.label:
                continue
            color = spec.color or PALETTE[idx % len(PALETTE)]
            out.append(
                f'<rect x="{frame.px1 - 150:.2f}" y="{ly - 9:.2f}" width="10" height="10" fill="{color}"/>'
            )
            out.append(
                f'<text x="{frame.px1 - 136:.2f}" y="{ly:.2f}">{_escape(spec.label)}</text>'
            )
            ly += 16
    out.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(out) + "\n")


def _escape(text: str) -> str:
    return text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
