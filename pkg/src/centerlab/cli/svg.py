"""Phase portraits as plain SVG.

Polylines carry data coordinates; a single group transform maps them to
the canvas, so the geometry can be read back from the file unchanged.
"""

from __future__ import annotations

import xml.etree.ElementTree as ET
from xml.sax.saxutils import escape

import numpy as np

SIZE = 600
MARGIN = 20


def _points_attr(P: np.ndarray) -> str:
    return " ".join(f"{x:.12g},{y:.12g}" for x, y in P)


def phase_portrait(trajectories, orbits=(), *, view=None, title: str = "") -> str:
    """SVG text with one ``trajectory`` polyline per curve and one ``orbit`` polyline per marked orbit."""
    curves = [np.asarray(c, dtype=float) for c in trajectories]
    closed = [np.asarray(c, dtype=float) for c in orbits]
    if view is None:
        allpts = np.concatenate(curves + closed) if curves or closed else np.zeros((1, 2))
        lo, hi = allpts.min(axis=0), allpts.max(axis=0)
        pad = 0.05 * np.maximum(hi - lo, 1e-9)
        xmin, ymin = lo - pad
        xmax, ymax = hi + pad
    else:
        xmin, xmax, ymin, ymax = map(float, view)
    inner = SIZE - 2 * MARGIN
    scale = inner / max(xmax - xmin, ymax - ymin)
    # y grows upward in data coordinates
    transform = (
        f"matrix({scale:.12g} 0 0 {-scale:.12g} "
        f"{MARGIN - scale * xmin:.12g} {MARGIN + scale * ymax:.12g})"
    )
    stroke = 1.5 / scale
    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" '
        f'viewBox="0 0 {SIZE} {SIZE}">',
        f"<title>{escape(title)}</title>",
        f'<rect x="0" y="0" width="{SIZE}" height="{SIZE}" fill="white"/>',
        f'<g transform="{transform}" fill="none" stroke-linejoin="round">',
    ]
    for i, c in enumerate(curves):
        lines.append(
            f'<polyline class="trajectory" id="trajectory-{i}" stroke="#1f4e99" '
            f'stroke-width="{stroke:.6g}" points="{_points_attr(c)}"/>'
        )
    for i, c in enumerate(closed):
        lines.append(
            f'<polyline class="orbit" id="orbit-{i}" stroke="#c0392b" '
            f'stroke-width="{2 * stroke:.6g}" points="{_points_attr(c)}"/>'
        )
    lines += ["</g>", "</svg>", ""]
    return "\n".join(lines)


def read_polylines(svg_text: str) -> dict:
    """Map polyline id to its ``(m, 2)`` data-coordinate array."""
    root = ET.fromstring(svg_text)
    out = {}
    for el in root.iter("{http://www.w3.org/2000/svg}polyline"):
        pts = [tuple(map(float, p.split(","))) for p in el.get("points").split()]
        out[el.get("id")] = np.array(pts)
    return out
