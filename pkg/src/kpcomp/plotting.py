"""Static SVG line plots with fixed layout, so the files diff cleanly."""
from __future__ import annotations

import math
from typing import Dict, List, Mapping, Sequence, Tuple, Union

import numpy as np

from .analysis import LOG_FLOOR, SweepTable
from .simulator import Trace

WIDTH, HEIGHT = 640, 420
LEFT, RIGHT, TOP, BOTTOM = 70, 20, 30, 50
MAX_POINTS = 4000
COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e")

KINDS = ("error_vs_t", "log_error_vs_t", "sweep_loglog", "loop_w_vs_u")

Series = Tuple[str, np.ndarray, np.ndarray]


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def _tick(v: float) -> str:
    return f"{v:.3g}"


def _decimate(x: np.ndarray, y: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Keep the min and max of each bucket so spikes survive thinning."""
    n = len(x)
    if n <= MAX_POINTS:
        return x, y
    buckets = np.array_split(np.arange(n), MAX_POINTS // 2)
    keep: List[int] = []
    for b in buckets:
        seg = y[b]
        i, j = b[int(np.argmin(seg))], b[int(np.argmax(seg))]
        keep.extend(sorted({int(i), int(j)}))
    idx = np.array(keep)
    return x[idx], y[idx]


def _columns(data, names: Sequence[str]) -> Dict[str, np.ndarray]:
    out = {}
    for name in names:
        if isinstance(data, Trace):
            out[name] = np.asarray(data.column(name), dtype=float)
        elif isinstance(data, Mapping) and name in data:
            out[name] = np.asarray(data[name], dtype=float)
        else:
            raise ValueError(f"plot input is missing column {name!r}")
    return out


def _series(data, kind: str) -> Tuple[List[Series], str, str, bool, bool]:
    if kind == "error_vs_t":
        c = _columns(data, ("t", "e"))
        return [("", c["t"], c["e"])], "t [s]", "e = r - H(u)", False, False
    if kind == "log_error_vs_t":
        c = _columns(data, ("t", "e"))
        return ([("", c["t"], np.abs(c["e"]))], "t [s]", "|e|", False, True)
    if kind == "loop_w_vs_u":
        c = _columns(data, ("u", "w"))
        return [("", c["u"], c["w"])], "u", "w = H(u)", False, False
    if kind == "sweep_loglog":
        if not isinstance(data, SweepTable):
            raise ValueError("sweep_loglog needs a SweepTable")
        series = []
        for K in data.gains():
            rows = sorted(data.for_gain(K), key=lambda r: r.omega)
            series.append((f"K={K:g}", np.array([r.freq_label_hz for r in rows]),
                           np.array([r.max_abs_e_steady for r in rows])))
        return series, "frequency 2πω [Hz]", "steady-state max |e|", True, True
    raise ValueError(f"unknown plot kind {kind!r}; expected one of {KINDS}")


def _clean(x, y, logx, logy):
    m = np.isfinite(x) & np.isfinite(y)
    if logx:
        m &= x > 0
    if logy:
        y = np.maximum(y, LOG_FLOOR)
    x, y = x[m], y[m]
    return (np.log10(x) if logx else x), (np.log10(y) if logy else y)


def _limits(vals: List[np.ndarray]) -> Tuple[float, float]:
    allv = np.concatenate(vals) if vals else np.zeros(0)
    if allv.size == 0:
        return 0.0, 1.0
    lo, hi = float(allv.min()), float(allv.max())
    if hi - lo < 1e-12 * max(1.0, abs(lo)):
        lo, hi = lo - 0.5, hi + 0.5
    pad = 0.03 * (hi - lo)
    return lo - pad, hi + pad


def render(data, kind: str, title: str = "") -> str:
    series, xlabel, ylabel, logx, logy = _series(data, kind)
    cleaned = [(label,) + _clean(x, y, logx, logy) for label, x, y in series]
    x0, x1 = _limits([c[1] for c in cleaned])
    y0, y1 = _limits([c[2] for c in cleaned])
    pw, ph = WIDTH - LEFT - RIGHT, HEIGHT - TOP - BOTTOM

    def px(v):
        return LEFT + (v - x0) / (x1 - x0) * pw

    def py(v):
        return TOP + ph - (v - y0) / (y1 - y0) * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
           f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">',
           f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
           f'<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>']
    for i in range(6):
        fx = x0 + (x1 - x0) * i / 5
        fy = y0 + (y1 - y0) * i / 5
        tx = _tick(10 ** fx) if logx else _tick(fx)
        ty = _tick(10 ** fy) if logy else _tick(fy)
        out.append(f'<line x1="{_fmt(px(fx))}" y1="{TOP + ph}" x2="{_fmt(px(fx))}" '
                   f'y2="{TOP + ph + 5}" stroke="black"/>')
        out.append(f'<text x="{_fmt(px(fx))}" y="{TOP + ph + 18}" '
                   f'text-anchor="middle">{tx}</text>')
        out.append(f'<line x1="{LEFT - 5}" y1="{_fmt(py(fy))}" x2="{LEFT}" '
                   f'y2="{_fmt(py(fy))}" stroke="black"/>')
        out.append(f'<text x="{LEFT - 8}" y="{_fmt(py(fy) + 4)}" '
                   f'text-anchor="end">{ty}</text>')
    out.append(f'<text x="{LEFT + pw / 2:.1f}" y="{HEIGHT - 10}" '
               f'text-anchor="middle">{_escape(xlabel)}</text>')
    out.append(f'<text x="15" y="{TOP + ph / 2:.1f}" text-anchor="middle" '
               f'transform="rotate(-90 15 {TOP + ph / 2:.1f})">{_escape(ylabel)}</text>')
    if title:
        out.append(f'<text x="{LEFT + pw / 2:.1f}" y="18" text-anchor="middle" '
                   f'font-size="13">{_escape(title)}</text>')
    for i, (label, x, y) in enumerate(cleaned):
        if len(x) == 0:
            continue
        x, y = _decimate(x, y)
        color = COLORS[i % len(COLORS)]
        pts = " ".join(f"{_fmt(px(a))},{_fmt(py(b))}" for a, b in zip(x, y))
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.2" '
                   f'points="{pts}"/>')
        if label:
            ly = TOP + 15 + 15 * i
            out.append(f'<text x="{LEFT + pw - 10}" y="{ly}" text-anchor="end" '
                       f'fill="{color}">{_escape(label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _escape(s: str) -> str:
    return s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def plot(data: Union[Trace, SweepTable, Mapping], kind: str, out_path, title: str = ""):
    svg = render(data, kind, title)
    with open(out_path, "w", encoding="utf-8") as fh:
        fh.write(svg)
    return out_path
