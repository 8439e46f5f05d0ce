"""Deterministic SVG pictures of a mesh, its positively cut triangles,
positive edges, the curve and optional projection whiskers."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np


@dataclass
class RenderOptions:
    width: int = 800
    margin: float = 10.0
    mesh_stroke: float = 0.4
    edge_stroke: float = 1.6
    curve_stroke: float = 1.2
    cut_fill: str = "#c8c8c8"
    mesh_color: str = "#888888"
    edge_color: str = "#000000"
    curve_color: str = "#1f4fbf"
    whisker_color: str = "#d0402a"
    shade_cut: bool = True
    whiskers: bool = False


def _f(v: float) -> str:
    return f"{v:.3f}"


def render_svg(tri, cls=None, loops=None, samples=None, path=None, curve=None, options=None) -> str:
    """Return (and optionally write) the SVG text.

    Positively cut triangles are shaded gray, positive edges drawn dashed, one
    path per loop, and the curve as a solid polyline.  With
    ``options.whiskers`` each sample gets a segment to its closest point.
    """
    opt = options or RenderOptions()
    V = tri.vertices
    pts = [V]
    if curve is None and cls is not None:
        curve = cls.curve
    polys = curve.polylines() if curve is not None else []
    pts += polys
    allp = np.vstack(pts) if len(V) or polys else np.zeros((1, 2))
    lo, hi = allp.min(axis=0), allp.max(axis=0)
    span = np.maximum(hi - lo, 1e-12)
    scale = (opt.width - 2 * opt.margin) / span[0]
    height = int(np.ceil(span[1] * scale + 2 * opt.margin))

    def xy(p):
        return _f(opt.margin + (p[0] - lo[0]) * scale), _f(height - opt.margin - (p[1] - lo[1]) * scale)

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{opt.width}" height="{height}" '
        f'viewBox="0 0 {opt.width} {height}">',
        '<rect width="100%" height="100%" fill="white"/>',
    ]
    cut = set(cls.cut_ids) if (cls is not None and opt.shade_cut) else set()
    out.append(f'<g stroke="{opt.mesh_color}" stroke-width="{opt.mesh_stroke}" stroke-linejoin="round">')
    for k, (a, b, c) in enumerate(tri.triangles.tolist()):
        fill = opt.cut_fill if k in cut else "none"
        p = " ".join(",".join(xy(V[i])) for i in (a, b, c))
        out.append(f'<polygon points="{p}" fill="{fill}"/>')
    out.append("</g>")

    for poly in polys:
        p = " ".join(",".join(xy(q)) for q in poly)
        out.append(
            f'<polygon points="{p}" fill="none" stroke="{opt.curve_color}" stroke-width="{opt.curve_stroke}"/>'
        )

    if loops:
        for lp in loops:
            p = " ".join(",".join(xy(V[i])) for i in lp.vertex_cycle)
            out.append(
                f'<polygon class="loop" data-loop="{lp.loop_id}" points="{p}" fill="none" '
                f'stroke="{opt.edge_color}" stroke-width="{opt.edge_stroke}" stroke-dasharray="6,4"/>'
            )
    elif cls is not None:
        for a, b in cls.positive_edges:
            (x0, y0), (x1, y1) = xy(V[a]), xy(V[b])
            out.append(
                f'<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y1}" stroke="{opt.edge_color}" '
                f'stroke-width="{opt.edge_stroke}" stroke-dasharray="6,4"/>'
            )

    if opt.whiskers and samples:
        out.append(f'<g stroke="{opt.whisker_color}" stroke-width="0.5">')
        for ls in samples:
            for p, q in zip(ls.x, ls.foot):
                (x0, y0), (x1, y1) = xy(p), xy(q)
                out.append(f'<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y1}"/>')
        out.append("</g>")
    out.append("</svg>")
    text = "\n".join(out) + "\n"
    if path is not None:
        Path(path).write_text(text)
    return text
