"""Feature-importance table and SVG bar chart."""
from __future__ import annotations

from typing import Sequence
from xml.sax.saxutils import escape


def ranked(names: Sequence[str], values: Sequence[float]) -> list[tuple[str, float]]:
    # stable: equal importances keep the canonical feature order
    return sorted(zip(names, values), key=lambda item: -item[1])


def importances_csv(names: Sequence[str], values: Sequence[float]) -> str:
    lines = ["feature,importance"]
    lines += [f"{name},{value:.9g}" for name, value in ranked(names, values)]
    return "\n".join(lines) + "\n"


def importances_svg(names: Sequence[str], values: Sequence[float], title: str = "Feature importance") -> str:
    rows = ranked(names, values)
    bar_h, gap, label_w, plot_w, top = 22, 8, 90, 320, 40
    height = top + len(rows) * (bar_h + gap) + 20
    width = label_w + plot_w + 80
    scale = max([v for _, v in rows] + [1e-12])
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">',
        f'<text x="{width / 2:g}" y="22" text-anchor="middle" font-size="14">{escape(title)}</text>',
    ]
    for k, (name, value) in enumerate(rows):
        y = top + k * (bar_h + gap)
        w = plot_w * max(value, 0.0) / scale
        parts.append(f'<text x="{label_w - 6}" y="{y + 15}" text-anchor="end">{escape(name)}</text>')
        parts.append(f'<rect x="{label_w}" y="{y}" width="{w:.3f}" height="{bar_h}" fill="#4c72b0"/>')
        parts.append(f'<text x="{label_w + w + 6:.3f}" y="{y + 15}">{value:.3f}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
