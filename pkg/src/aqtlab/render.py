"""Dependency-free SVG line chart of sweep results: peak load against log2 n."""
from __future__ import annotations

import csv
import io
import math
from fractions import Fraction

from .topology import ValidationError

SWEEP_COLUMNS = ["n", "B", "sigma", "protocol", "peak_load", "proof_bound"]
PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"]
W, H, PAD = 640, 400, 56


def parse_sweep_csv(text: str) -> list[dict]:
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames is None:
        return []
    missing = [c for c in SWEEP_COLUMNS if c not in reader.fieldnames]
    if missing:
        raise ValidationError(f"sweep CSV lacks columns {missing}")
    rows = []
    for lineno, raw in enumerate(reader, start=2):
        try:
            rows.append({
                "n": int(raw["n"]),
                "B": Fraction(raw["B"]),
                "sigma": Fraction(raw["sigma"]),
                "protocol": raw["protocol"],
                "peak_load": Fraction(raw["peak_load"]),
                "proof_bound": Fraction(raw["proof_bound"]),
            })
        except (TypeError, ValueError, ZeroDivisionError) as exc:
            raise ValidationError(f"line {lineno}: {exc}") from None
        if rows[-1]["n"] < 1:
            raise ValidationError(f"line {lineno}: n must be positive")
    return rows


def _f(x: float) -> str:
    return f"{x:.2f}"


def render_svg(rows: list[dict], title: str = "peak buffer load vs log2 n") -> str:
    series: dict[str, list] = {}
    for r in rows:
        series.setdefault(r["protocol"], []).append((math.log2(r["n"]), float(r["peak_load"])))
    xs = [x for pts in series.values() for x, _ in pts] or [0.0, 1.0]
    ys = [y for pts in series.values() for _, y in pts] or [0.0, 1.0]
    x0, x1 = min(xs), max(xs)
    y0, y1 = 0.0, max(ys)
    if x1 == x0:
        x1 = x0 + 1
    if y1 == y0:
        y1 = y0 + 1

    def px(x):
        return PAD + (x - x0) / (x1 - x0) * (W - 2 * PAD)

    def py(y):
        return H - PAD - (y - y0) / (y1 - y0) * (H - 2 * PAD)

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">',
        f'<rect width="{W}" height="{H}" fill="white"/>',
        f'<text x="{W // 2}" y="24" text-anchor="middle" font-family="sans-serif" font-size="14">{title}</text>',
        f'<line class="axis" x1="{PAD}" y1="{H - PAD}" x2="{W - PAD}" y2="{H - PAD}" stroke="black"/>',
        f'<line class="axis" x1="{PAD}" y1="{PAD}" x2="{PAD}" y2="{H - PAD}" stroke="black"/>',
        f'<text x="{W // 2}" y="{H - 16}" text-anchor="middle" font-family="sans-serif" font-size="12">log2 n</text>',
        f'<text x="16" y="{H // 2}" text-anchor="middle" font-family="sans-serif" font-size="12" '
        f'transform="rotate(-90 16 {H // 2})">peak load</text>',
    ]
    for k in range(5):
        xv = x0 + (x1 - x0) * k / 4
        yv = y0 + (y1 - y0) * k / 4
        out.append(f'<text x="{_f(px(xv))}" y="{H - PAD + 16}" text-anchor="middle" '
                   f'font-family="sans-serif" font-size="10">{xv:g}</text>')
        out.append(f'<text x="{PAD - 6}" y="{_f(py(yv) + 3)}" text-anchor="end" '
                   f'font-family="sans-serif" font-size="10">{yv:g}</text>')
    for idx, name in enumerate(sorted(series)):
        color = PALETTE[idx % len(PALETTE)]
        pts = sorted(series[name])
        coords = " ".join(f"{_f(px(x))},{_f(py(y))}" for x, y in pts)
        out.append(f'<polyline data-protocol="{name}" fill="none" stroke="{color}" '
                   f'stroke-width="2" points="{coords}"/>')
        for x, y in pts:
            out.append(f'<circle cx="{_f(px(x))}" cy="{_f(py(y))}" r="3" fill="{color}"/>')
        out.append(f'<text x="{W - PAD + 4}" y="{PAD + 14 * idx}" font-family="sans-serif" '
                   f'font-size="11" fill="{color}">{name}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
