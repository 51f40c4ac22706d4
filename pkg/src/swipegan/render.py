"""SVG rendering of a single path over the keyboard."""

from __future__ import annotations

from xml.sax.saxutils import escape

import numpy as np

from swipegan.layout import KeyboardLayout
from swipegan.pathcore import Path

WIDTH, HEIGHT = 1000, 333
START_COLOR = (0x00, 0xA0, 0x00)
END_COLOR = (0xE0, 0xC0, 0x00)


def segment_color(t: float) -> str:
    """Linear interpolation from green (t=0) to yellow (t=1), as ``#rrggbb``."""
    t = min(1.0, max(0.0, t))
    rgb = [round(a + (b - a) * t) for a, b in zip(START_COLOR, END_COLOR)]
    return "#{:02x}{:02x}{:02x}".format(*rgb)


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def render_svg(path: Path, layout: KeyboardLayout, title: str | None = None) -> str:
    """Key boxes with letter labels, then one ``<line class="segment">`` per path step."""
    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {WIDTH} {HEIGHT}" width="{WIDTH}" height="{HEIGHT}">',
    ]
    if title:
        lines.append(f"  <title>{escape(title)}</title>")
    lines.append('  <rect x="0" y="0" width="1000" height="333" fill="#ffffff"/>')
    lines.append('  <g class="keys" font-family="sans-serif" font-size="28" text-anchor="middle">')
    for ch in sorted(layout.keys):
        k = layout.keys[ch]
        x, y = (k.cx - k.w / 2) * WIDTH, (k.cy - k.h / 2) * HEIGHT
        lines.append(
            f'    <rect class="key" x="{_fmt(x)}" y="{_fmt(y)}" width="{_fmt(k.w * WIDTH)}" '
            f'height="{_fmt(k.h * HEIGHT)}" fill="#f4f4f4" stroke="#999999"/>'
        )
        lines.append(
            f'    <text x="{_fmt(k.cx * WIDTH)}" y="{_fmt(k.cy * HEIGHT + 10)}" fill="#555555">{escape(ch)}</text>'
        )
    lines.append("  </g>")
    pts = np.asarray(path.points) * [WIDTH, HEIGHT]
    n_seg = len(pts) - 1
    lines.append('  <g class="path" stroke-width="6" stroke-linecap="round">')
    for i in range(n_seg):
        t = i / (n_seg - 1) if n_seg > 1 else 0.0
        (x1, y1), (x2, y2) = pts[i], pts[i + 1]
        lines.append(
            f'    <line class="segment" x1="{_fmt(x1)}" y1="{_fmt(y1)}" x2="{_fmt(x2)}" y2="{_fmt(y2)}" '
            f'stroke="{segment_color(t)}"/>'
        )
    lines.append("  </g>")
    lines.append("</svg>")
    return "\n".join(lines) + "\n"
