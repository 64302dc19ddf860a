"""Minimal SVG line plots (no plotting dependency)."""

from __future__ import annotations

from pathlib import Path

import numpy as np

_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def line_plot(
    path: str | Path,
    series: list[tuple[str, np.ndarray, np.ndarray]],
    *,
    title: str = "",
    xlabel: str = "",
    ylabel: str = "",
    width: int = 720,
    height: int = 360,
    max_points: int = 4000,
) -> Path:
    """Write a polyline plot of ``(label, x, y)`` series to ``path``.

    Non-finite points are skipped.  Long series are thinned to ``max_points``
    by striding, which is adequate for a preview.
    """
    path = Path(path)
    pad_l, pad_r, pad_t, pad_b = 64, 16, 28, 44
    xs = [np.asarray(s[1], float) for s in series]
    ys = [np.asarray(s[2], float) for s in series]
    finite = [np.isfinite(x) & np.isfinite(y) for x, y in zip(xs, ys)]
    allx = np.concatenate([x[f] for x, f in zip(xs, finite)]) if series else np.zeros(1)
    ally = np.concatenate([y[f] for y, f in zip(ys, finite)]) if series else np.zeros(1)
    if allx.size == 0:
        allx = ally = np.zeros(1)
    x0, x1 = float(allx.min()), float(allx.max())
    y0, y1 = float(ally.min()), float(ally.max())
    if x1 == x0:
        x1 = x0 + 1.0
    if y1 == y0:
        y1 = y0 + 1.0
    pw, ph = width - pad_l - pad_r, height - pad_t - pad_b

    def sx(v):
        return pad_l + (v - x0) / (x1 - x0) * pw

    def sy(v):
        return pad_t + (1.0 - (v - y0) / (y1 - y0)) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'font-family="sans-serif" font-size="11">',
        f'<rect x="{pad_l}" y="{pad_t}" width="{pw}" height="{ph}" fill="none" stroke="#444"/>',
        f'<text x="{width / 2:.1f}" y="16" text-anchor="middle" font-size="13">{title}</text>',
        f'<text x="{width / 2:.1f}" y="{height - 8}" text-anchor="middle">{xlabel}</text>',
        f'<text x="14" y="{pad_t + ph / 2:.1f}" transform="rotate(-90 14 {pad_t + ph / 2:.1f})" '
        f'text-anchor="middle">{ylabel}</text>',
    ]
    for frac in (0.0, 0.5, 1.0):
        xv = x0 + frac * (x1 - x0)
        yv = y0 + frac * (y1 - y0)
        out.append(f'<text x="{sx(xv):.1f}" y="{pad_t + ph + 14}" text-anchor="middle">{xv:.3g}</text>')
        out.append(f'<text x="{pad_l - 4}" y="{sy(yv) + 4:.1f}" text-anchor="end">{yv:.3g}</text>')
    for i, ((label, _, _), x, y, f) in enumerate(zip(series, xs, ys, finite)):
        x, y = x[f], y[f]
        if x.size > max_points:
            step = -(-x.size // max_points)
            x, y = x[::step], y[::step]
        pts = " ".join(f"{sx(a):.2f},{sy(b):.2f}" for a, b in zip(x, y))
        color = _COLORS[i % len(_COLORS)]
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1" points="{pts}"/>')
        out.append(
            f'<text x="{pad_l + 8}" y="{pad_t + 14 + 13 * i}" fill="{color}">{label}</text>'
        )
    out.append("</svg>")
    path.write_text("\n".join(out) + "\n")
    return path
