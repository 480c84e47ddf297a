"""Deterministic SVG previews of planar networks and print paths."""

from __future__ import annotations

from pathlib import Path
from typing import Optional

import numpy as np
from matplotlib import colormaps

from .errors import ValidationError
from .netgraph import LEFT, Network
from .toolpath import PrintPath

MARGIN = 5.0


def _hex(rgba) -> str:
    r, g, b = (int(round(255 * c)) for c in rgba[:3])
    return f"#{r:02x}{g:02x}{b:02x}"


def _n(v: float) -> str:
    s = f"{v:.4f}".rstrip("0").rstrip(".")
    return "0" if s in ("-0", "") else s


def _frame(points: np.ndarray, stroke: float) -> tuple[str, list]:
    if len(points):
        lo, hi = points.min(axis=0), points.max(axis=0)
    else:
        lo, hi = np.zeros(2), np.ones(2)
    lo, hi = lo - MARGIN, hi + MARGIN
    w, h = hi - lo
    head = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_n(w)}mm" height="{_n(h)}mm" '
        f'viewBox="{_n(lo[0])} {_n(-hi[1])} {_n(w)} {_n(h)}">',
        f'<g transform="scale(1,-1)" fill="none" stroke-width="{_n(stroke)}" '
        'stroke-linecap="round">',
    ]
    return "\n".join(head), ["</g>", "</svg>"]


def _edge_element(p0, p1, arc, color: str, attrs: str = "") -> str:
    if arc is None:
        return (f'<line x1="{_n(p0[0])}" y1="{_n(p0[1])}" x2="{_n(p1[0])}" y2="{_n(p1[1])}" '
                f'stroke="{color}"{attrs}/>')
    # drawn in math orientation: sweep 1 is counter-clockwise
    sweep = 0 if arc.side == LEFT else 1
    return (f'<path d="M {_n(p0[0])} {_n(p0[1])} A {_n(arc.radius)} {_n(arc.radius)} 0 0 {sweep} '
            f'{_n(p1[0])} {_n(p1[1])}" stroke="{color}" data-R="{arc.radius:.6g}" '
            f'data-alpha="{arc.alpha:.6g}"{attrs}/>')


def network_svg(network: Network, tensions=None, cmap: str = "viridis",
                stroke: Optional[float] = None) -> str:
    """Edges as lines or circular arcs, fixed vertices as squares.

    With ``tensions``, each edge is colored on ``cmap`` scaled from the
    smallest to the largest tension.
    """
    if network.dimension != 2:
        raise ValidationError("preview requires a 2D network")
    x = network.vertices
    span = float(np.ptp(x, axis=0).max()) if len(x) else 1.0
    stroke = stroke or max(span / 400.0, 0.05)
    head, tail = _frame(x, stroke)
    body = []
    colors = ["#333333"] * network.n_edges
    extra = ""
    if tensions is not None:
        t = np.asarray(tensions, float)
        if t.shape != (network.n_edges,):
            raise ValidationError("one tension per edge required")
        lo, hi = (float(t.min()), float(t.max())) if t.size else (0.0, 0.0)
        scale = (t - lo) / (hi - lo) if hi > lo else np.zeros_like(t)
        cm = colormaps[cmap]
        colors = [_hex(cm(float(v))) for v in scale]
        extra = f'<desc data-tmin="{lo:.6g}" data-tmax="{hi:.6g}">tension colormap {cmap}</desc>'
    if extra:
        body.append(extra)
    for k, (a, b) in enumerate(network.edges):
        arc = network.arcs[k] if network.arcs is not None else None
        attrs = f' data-edge="{k}"'
        if tensions is not None:
            attrs += f' data-tension="{float(tensions[k]):.6g}"'
        body.append(_edge_element(x[a], x[b], arc, colors[k], attrs))
    r = 2.0 * stroke
    for v in np.flatnonzero(network.fixed):
        body.append(f'<rect x="{_n(x[v, 0] - r)}" y="{_n(x[v, 1] - r)}" width="{_n(2 * r)}" '
                    f'height="{_n(2 * r)}" fill="#d62728" stroke="none"/>')
    return "\n".join([head, *body, *tail]) + "\n"


def paths_svg(paths: list, stroke: float = 0.4) -> str:
    """Print paths colored by print order, crossings marked with dots."""
    pts = [np.asarray(p) for path in paths for e in path.elements for p in (e.p0, e.p1)]
    head, tail = _frame(np.array(pts) if pts else np.zeros((0, 2)), stroke)
    cm = colormaps["tab10"]
    body = []
    for n, path in enumerate(paths):
        color = _hex(cm(n % 10))
        body.append(f'<g data-path="{n}">')
        for e in path.elements:
            body.append(_edge_element(e.p0, e.p1, e.arc, color, f' data-edge="{e.edge}"'))
        if path.crossings:
            P, s = path.polyline()
            for c in path.crossings:
                px, py = np.interp(c, s, P[:, 0]), np.interp(c, s, P[:, 1])
                body.append(f'<circle cx="{_n(px)}" cy="{_n(py)}" r="{_n(stroke)}" '
                            f'fill="{color}" stroke="none"/>')
        body.append("</g>")
    return "\n".join([head, *body, *tail]) + "\n"


def preview_svg(obj, out=None, tensions=None, **kwargs) -> str:
    """SVG text for a network or a list of print paths; written to ``out`` if given."""
    if isinstance(obj, Network):
        text = network_svg(obj, tensions=tensions, **kwargs)
    elif isinstance(obj, (list, tuple)) and all(isinstance(p, PrintPath) for p in obj):
        text = paths_svg(list(obj), **kwargs)
    else:
        raise ValidationError("preview expects a Network or a list of PrintPath")
    if out is not None:
        Path(out).write_text(text)
    return text
