"""Datasets behind the noise-threshold and speed/security comparisons.

Figure 1: maximum tolerable depolarizing rate against the number of signal
states in fixed dimension, for equiangular codes with m = n-2 and
m = floor(n/2), and for k = 2..d+1 unbiased bases (kd states).

Figure 2: for n = 2d states, each protocol's best noiseless key rate per
sent signal (sift probability times key rate, maximized over m) paired with
its best depolarizing threshold (maximized over m); unbiased bases use k = 2.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import astuple, dataclass, fields

from .mub import MubParams, mub_threshold
from .protocol import EscParams, key_rate_noiseless, sift_rate_noiseless, threshold


@dataclass(frozen=True)
class Fig1Row:
    ensemble_kind: str
    count: int
    policy: str
    threshold_r: float


@dataclass(frozen=True)
class Fig2Row:
    d: int
    ensemble_kind: str
    rate_max: float
    threshold_r: float


def _policy_key(policy: str) -> tuple:
    head, _, val = policy.partition("=")
    return (head, val)


def figure1_data(d: int = 10, n_range=None, strict: bool = True) -> list[Fig1Row]:
    """Threshold rows sorted by (kind, count, policy).

    ``strict=False`` lets ESC counts exceed d^2, where only the closed forms
    (not an actual code) exist.
    """
    if n_range is None:
        n_range = range(d + 1, d * d + 1)
    rows = []
    for n in n_range:
        for label, m in (("m=n-2", n - 2), ("m=n/2", n // 2)):
            res = threshold(EscParams(n, d, m, strict=strict))
            rows.append(Fig1Row("ESC", n, label, res.r_star))
    for k in range(2, d + 2):
        rows.append(Fig1Row("MUB", k * d, f"k={k}", mub_threshold(MubParams(d, k)).r_star))
    rows.sort(key=lambda r: (r.ensemble_kind, r.count, _policy_key(r.policy)))
    return rows


def esc_best_rate(n: int, d: int) -> tuple[float, int]:
    """Largest sift-weighted noiseless key rate over m, with the m attaining it."""
    best = max(
        (sift_rate_noiseless(EscParams(n, d, m)) * key_rate_noiseless(EscParams(n, d, m)), -m)
        for m in range(n - 1)
    )
    return best[0], -best[1]


def esc_best_threshold(n: int, d: int) -> tuple[float, int]:
    best = max((threshold(EscParams(n, d, m)).r_star, -m) for m in range(n - 1))
    return best[0], -best[1]


def figure2_data(dims=(2, 3, 5, 7, 10)) -> list[Fig2Row]:
    rows = []
    for d in dims:
        rate, _ = esc_best_rate(2 * d, d)
        r_star, _ = esc_best_threshold(2 * d, d)
        rows.append(Fig2Row(d, "ESC", rate, r_star))
        rows.append(Fig2Row(d, "MUB", math.log2(d) / 2, mub_threshold(MubParams(d, 2)).r_star))
    rows.sort(key=lambda r: (r.ensemble_kind, r.d))
    return rows


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.12g}"
    return str(v)


def rows_to_csv(rows) -> str:
    """CSV with a header row; floats carry 12 significant digits."""
    if not rows:
        return ""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow([f.name for f in fields(rows[0])])
    for row in rows:
        writer.writerow([_fmt(v) for v in astuple(row)])
    return buf.getvalue()


def rows_to_svg(rows, x: str, y: str, series: str, width: int = 480, height: int = 320) -> str:
    """Minimal SVG with one polyline per series value; no axes or labels beyond a legend."""
    groups: dict = {}
    for row in rows:
        groups.setdefault(getattr(row, series) if isinstance(series, str) else series(row), []).append(
            (float(getattr(row, x)), float(getattr(row, y)))
        )
    xs = [p[0] for pts in groups.values() for p in pts]
    ys = [p[1] for pts in groups.values() for p in pts]
    x0, x1 = min(xs), max(xs) or 1.0
    y0, y1 = 0.0, max(ys) or 1.0
    pad = 30

    def sx(v):
        return pad + (v - x0) / ((x1 - x0) or 1.0) * (width - 2 * pad)

    def sy(v):
        return height - pad - (v - y0) / ((y1 - y0) or 1.0) * (height - 2 * pad)

    colours = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"]
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">']
    for i, (name, pts) in enumerate(sorted(groups.items(), key=lambda kv: str(kv[0]))):
        pts = sorted(pts)
        path = " ".join(f"{sx(a):.2f},{sy(b):.2f}" for a, b in pts)
        c = colours[i % len(colours)]
        out.append(f'<polyline fill="none" stroke="{c}" points="{path}"/>')
        out.append(f'<text x="{pad + 5}" y="{pad + 14 * i}" fill="{c}" font-size="11">{name}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
