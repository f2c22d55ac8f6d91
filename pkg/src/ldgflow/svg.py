"""Minimal static SVG snapshots of closed curves (no plotting dependency)."""

from __future__ import annotations

import numpy as np


def render_svg(path, curves, size=600, margin=0.06):
    """Write closed polylines to an SVG file.

    curves: iterable of (vertices, style) pairs where vertices is an (n, 2)
    array and style a dict with optional 'stroke', 'width', 'dash' keys.
    The viewport is the joint bounding box with a relative margin; the y
    axis points up.
    """
    curves = [(np.asarray(v, dtype=float), dict(s)) for v, s in curves]
    lo = np.min([v.min(axis=0) for v, _ in curves], axis=0)
    hi = np.max([v.max(axis=0) for v, _ in curves], axis=0)
    span = float(max(hi[0] - lo[0], hi[1] - lo[1], 1e-30))
    pad = margin * span
    lo -= pad
    span += 2 * pad
    scale = size / span

    def to_pix(v):
        x = (v[:, 0] - lo[0]) * scale
        y = size - (v[:, 1] - lo[1]) * scale
        return x, y

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" '
        f'height="{size}" viewBox="0 0 {size} {size}">',
        f'<rect width="{size}" height="{size}" fill="white"/>',
    ]
    for verts, style in curves:
        x, y = to_pix(verts)
        pts = " ".join(f"{a:.2f},{b:.2f}" for a, b in zip(x, y))
        stroke = style.get("stroke", "black")
        width = style.get("width", 1.5)
        dash = style.get("dash")
        dash_attr = f' stroke-dasharray="{dash}"' if dash else ""
        parts.append(
            f'<polygon points="{pts}" fill="none" stroke="{stroke}" '
            f'stroke-width="{width}"{dash_attr}/>'
        )
    parts.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(parts) + "\n")
