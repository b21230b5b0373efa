"""Static SVG overlay of targets and estimates for a seeded sample of rows."""
from __future__ import annotations

import numpy as np

from synergy.errors import ShapeError

WIDTH, HEIGHT = 900, 420
LEFT, RIGHT, TOP, BOTTOM = 70, 20, 40, 60


def sample_rows(n_rows, n, seed):
    if n < 1:
        raise ValueError("sample count must be >= 1")
    if n > n_rows:
        raise ValueError(f"sample count {n} exceeds {n_rows} rows")
    return np.sort(np.random.default_rng(seed).choice(n_rows, size=n, replace=False))


def _series(xs, ys, color, label_class):
    points = " ".join(f"{x:.2f},{y:.2f}" for x, y in zip(xs, ys))
    dots = "".join(f'<circle cx="{x:.2f}" cy="{y:.2f}" r="2.5" fill="{color}"/>' for x, y in zip(xs, ys))
    return (
        f'<g class="{label_class}"><polyline points="{points}" fill="none" stroke="{color}" '
        f'stroke-width="1.2"/>{dots}</g>'
    )


def render_svg(targets, estimates, title="Targets vs estimates") -> str:
    targets = np.asarray(targets, dtype=np.float64)
    estimates = np.asarray(estimates, dtype=np.float64)
    if targets.shape != estimates.shape or targets.ndim != 1:
        raise ShapeError("targets and estimates must be aligned vectors")
    n = len(targets)
    if n == 0:
        raise ValueError("nothing to plot")
    lo = float(min(targets.min(), estimates.min()))
    hi = float(max(targets.max(), estimates.max()))
    if hi == lo:
        hi, lo = hi + 1.0, lo - 1.0
    plot_w = WIDTH - LEFT - RIGHT
    plot_h = HEIGHT - TOP - BOTTOM
    xs = LEFT + (np.arange(n) + 0.5) * plot_w / n
    scale = lambda v: TOP + (hi - v) / (hi - lo) * plot_h  # noqa: E731
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}">',
        '<rect width="100%" height="100%" fill="white"/>',
        f'<text x="{WIDTH / 2:.1f}" y="22" text-anchor="middle" font-size="15">{title}</text>',
        f'<line x1="{LEFT}" y1="{TOP + plot_h}" x2="{LEFT + plot_w}" y2="{TOP + plot_h}" stroke="black"/>',
        f'<line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{TOP + plot_h}" stroke="black"/>',
    ]
    for frac in (0.0, 0.25, 0.5, 0.75, 1.0):
        v = lo + frac * (hi - lo)
        y = scale(v)
        parts.append(f'<line x1="{LEFT - 4}" y1="{y:.2f}" x2="{LEFT}" y2="{y:.2f}" stroke="black"/>')
        parts.append(f'<text x="{LEFT - 7}" y="{y + 4:.2f}" text-anchor="end" font-size="11">{v:.1f}</text>')
    parts.append(
        f'<text x="{LEFT + plot_w / 2:.1f}" y="{HEIGHT - 15}" text-anchor="middle" font-size="13">sample</text>'
    )
    parts.append(
        f'<text x="18" y="{TOP + plot_h / 2:.1f}" text-anchor="middle" font-size="13" '
        f'transform="rotate(-90 18 {TOP + plot_h / 2:.1f})">synergy score</text>'
    )
    parts.append(_series(xs, scale(targets), "#1f77b4", "targets"))
    parts.append(_series(xs, scale(estimates), "#d62728", "estimates"))
    lx = LEFT + plot_w - 150
    parts.append(
        f'<g class="legend"><rect x="{lx}" y="{TOP + 5}" width="140" height="44" fill="white" stroke="#999"/>'
        f'<line x1="{lx + 10}" y1="{TOP + 19}" x2="{lx + 35}" y2="{TOP + 19}" stroke="#1f77b4" stroke-width="2"/>'
        f'<text x="{lx + 42}" y="{TOP + 23}" font-size="12">target</text>'
        f'<line x1="{lx + 10}" y1="{TOP + 37}" x2="{lx + 35}" y2="{TOP + 37}" stroke="#d62728" stroke-width="2"/>'
        f'<text x="{lx + 42}" y="{TOP + 41}" font-size="12">estimate</text></g>'
    )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
