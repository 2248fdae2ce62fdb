"""Hand-written SVG 1.1 charts; text output depends only on the rows."""

from __future__ import annotations

import re
from pathlib import Path
from xml.sax.saxutils import escape

W, H = 640, 400
LEFT, RIGHT, TOP, BOTTOM = 60, 70, 40, 110
PLOT_W = W - LEFT - RIGHT
PLOT_H = H - TOP - BOTTOM


def _n(x: float) -> str:
    text = f"{x:.2f}"
    return "0.00" if text == "-0.00" else text


def _header(title: str) -> list:
    return [
        '<?xml version="1.0" encoding="UTF-8" standalone="no"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{W}" height="{H}" '
        f'viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="11">',
        f"<title>{escape(title)}</title>",
        f'<rect x="0" y="0" width="{W}" height="{H}" fill="#ffffff"/>',
        f'<text x="{W / 2:.0f}" y="22" text-anchor="middle" font-size="14">{escape(title)}</text>',
    ]


def _slot(i: int, n: int):
    """(x, width) of bar ``i`` out of ``n`` equally spaced slots."""
    step = PLOT_W / max(n, 1)
    width = step * 0.7
    return LEFT + step * i + (step - width) / 2, width


def _xlabel(x_mid: float, label: str) -> str:
    y = TOP + PLOT_H + 12
    return (f'<text x="{_n(x_mid)}" y="{y}" text-anchor="end" '
            f'transform="rotate(-45 {_n(x_mid)} {y})">{escape(label)}</text>')


def _axis(x: float, lo: float, hi: float, ticks: int, fmt, anchor: str, color: str) -> list:
    out = [f'<line x1="{_n(x)}" y1="{TOP}" x2="{_n(x)}" y2="{TOP + PLOT_H}" stroke="{color}"/>']
    dx = -5 if anchor == "end" else 5
    for k in range(ticks + 1):
        v = lo + (hi - lo) * k / ticks
        y = TOP + PLOT_H - PLOT_H * k / ticks
        out.append(f'<text x="{_n(x + dx)}" y="{_n(y + 4)}" text-anchor="{anchor}" fill="{color}">'
                   f"{escape(fmt(v))}</text>")
    return out


def f1_chart(rows, dataset: str) -> str:
    """Mean F1 per technique (0..1 axis) with a dashed baseline reference line."""
    rows = [r for r in rows if r.dataset == dataset]
    parts = _header(f"Mean F1 per technique: {dataset} (synthetic analog)")
    parts += _axis(LEFT, 0.0, 1.0, 5, lambda v: f"{v:.1f}", "end", "#000000")
    parts.append(f'<line x1="{LEFT}" y1="{TOP + PLOT_H}" x2="{LEFT + PLOT_W}" y2="{TOP + PLOT_H}" '
                 f'stroke="#000000"/>')
    base = next((r.mean_f1 for r in rows if r.technique == "baseline"), None)
    for i, r in enumerate(rows):
        x, w = _slot(i, len(rows))
        parts.append(_xlabel(x + w / 2, r.technique))
        if r.mean_f1 is None:
            parts.append(f'<text x="{_n(x + w / 2)}" y="{TOP + PLOT_H - 4}" text-anchor="middle" '
                         f'fill="#999999">n/a</text>')
            continue
        h = PLOT_H * min(max(r.mean_f1, 0.0), 1.0)
        fill = "#7f7f7f" if r.technique == "baseline" else "#1f77b4"
        parts.append(f'<rect class="bar" x="{_n(x)}" y="{_n(TOP + PLOT_H - h)}" width="{_n(w)}" '
                     f'height="{_n(h)}" fill="{fill}"><title>{escape(r.technique)}: '
                     f"{r.mean_f1:.6g}</title></rect>")
    if base is not None:
        y = TOP + PLOT_H - PLOT_H * min(max(base, 0.0), 1.0)
        parts.append(f'<line class="baseline" x1="{LEFT}" y1="{_n(y)}" x2="{LEFT + PLOT_W}" y2="{_n(y)}" '
                     f'stroke="#d62728" stroke-dasharray="6,4"/>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def tradeoff_chart(rows, dataset: str) -> str:
    """Improvement % bars (left axis) with inference-time markers (right axis)."""
    rows = [r for r in rows if r.dataset == dataset and r.technique != "baseline"]
    parts = _header(f"Improvement vs inference time: {dataset} (synthetic analog)")
    imps = [r.improvement_pct for r in rows if r.improvement_pct is not None]
    lo = min([0.0] + imps)
    hi = max([0.0] + imps)
    if hi - lo < 1e-12:
        hi = lo + 1.0
    pad = 0.1 * (hi - lo)
    lo, hi = (lo - pad if lo < 0 else lo), hi + pad
    times = [r.infer_ms_per_1k for r in rows if r.infer_ms_per_1k is not None]
    tmax = max(times) * 1.1 if times and max(times) > 0 else 1.0

    def y_imp(v):
        return TOP + PLOT_H - PLOT_H * (v - lo) / (hi - lo)

    def y_time(v):
        return TOP + PLOT_H - PLOT_H * v / tmax

    parts += _axis(LEFT, lo, hi, 5, lambda v: f"{v:.1f}%", "end", "#1f77b4")
    parts += _axis(LEFT + PLOT_W, 0.0, tmax, 5, lambda v: f"{v:.3g}", "start", "#d62728")
    zero = y_imp(0.0)
    parts.append(f'<line x1="{LEFT}" y1="{_n(zero)}" x2="{LEFT + PLOT_W}" y2="{_n(zero)}" stroke="#000000"/>')
    parts.append(f'<text x="14" y="{TOP + PLOT_H / 2:.0f}" transform="rotate(-90 14 {TOP + PLOT_H / 2:.0f})" '
                 f'text-anchor="middle" fill="#1f77b4">F1 improvement over baseline (%)</text>')
    xr = W - 12
    parts.append(f'<text x="{xr}" y="{TOP + PLOT_H / 2:.0f}" transform="rotate(90 {xr} {TOP + PLOT_H / 2:.0f})" '
                 f'text-anchor="middle" fill="#d62728">inference ms per 1000 samples</text>')
    for i, r in enumerate(rows):
        x, w = _slot(i, len(rows))
        parts.append(_xlabel(x + w / 2, r.technique))
        if r.improvement_pct is None:
            parts.append(f'<text x="{_n(x + w / 2)}" y="{_n(zero - 4)}" text-anchor="middle" '
                         f'fill="#999999">n/a</text>')
        else:
            y = y_imp(r.improvement_pct)
            top, h = min(y, zero), abs(zero - y)
            parts.append(f'<rect class="bar" x="{_n(x)}" y="{_n(top)}" width="{_n(w)}" height="{_n(h)}" '
                         f'fill="#1f77b4"><title>{escape(r.technique)}: {r.improvement_pct:.6g}%</title></rect>')
        if r.infer_ms_per_1k is not None:
            parts.append(f'<circle class="marker" cx="{_n(x + w / 2)}" cy="{_n(y_time(r.infer_ms_per_1k))}" '
                         f'r="4" fill="#d62728"><title>{escape(r.technique)}: '
                         f"{r.infer_ms_per_1k:.6g} ms/1k</title></circle>")
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def _slug(name: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]+", "_", name)


def emit_charts(rows, out_dir) -> list:
    """Write ``f1_<dataset>.svg`` and ``tradeoff_<dataset>.svg`` per dataset; returns the paths."""
    if not rows:
        raise ValueError("no rows to chart")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for dataset in sorted({r.dataset for r in rows}):
        for name, render in (("f1", f1_chart), ("tradeoff", tradeoff_chart)):
            path = out / f"{name}_{_slug(dataset)}.svg"
            path.write_text(render(rows, dataset), encoding="utf-8")
            paths.append(path)
    return paths
