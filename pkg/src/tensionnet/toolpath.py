"""Continuous print paths, crossing z-hops and G-code emission."""

from __future__ import annotations

import dataclasses
import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ValidationError
from .material import MaterialModel
from .netgraph import LEFT, Arc, Network
from .relax import arc_center

log = logging.getLogger(__name__)

CHORDS = "chords"
NATIVE = "native"

DEFAULT_HEADER = """; tensionnet toolpath
; nozzle {nozzle_diameter:.2f} mm, layer {layer_height:.2f} mm, extrusion ratio {extrusion_ratio:.6f}
M140 S{bed_temp:.0f}
M104 S{nozzle_temp:.0f}
M190 S{bed_temp:.0f}
M109 S{nozzle_temp:.0f}
G21
G90
M82
G92 E0
"""
DEFAULT_FOOTER = """G91
G0 Z5
G90
M104 S0
M140 S0
M84
"""


@dataclass(frozen=True)
class PathElement:
    edge: int
    start: int
    end: int
    p0: tuple
    p1: tuple
    arc: Optional[Arc] = None  # side relative to the start -> end direction

    @property
    def length(self) -> float:
        if self.arc is not None:
            return self.arc.length
        return math.dist(self.p0, self.p1)

    def sample(self, tol: float = 0.1) -> tuple[np.ndarray, np.ndarray]:
        """Points along the element (chord deviation <= ``tol``) and their arc-length offsets."""
        p0, p1 = np.asarray(self.p0), np.asarray(self.p1)
        if self.arc is None:
            return np.vstack([p0, p1]), np.array([0.0, self.length])
        R, alpha = self.arc.radius, self.arc.alpha
        step = 2.0 * math.acos(max(-1.0, 1.0 - tol / R)) if tol < 2 * R else math.pi
        n = max(1, math.ceil(alpha / step - 1e-12))
        t = np.linspace(0.0, 1.0, n + 1)
        return _arc_at(p0, p1, self.arc, t), t * self.arc.length

    def point_at(self, t: np.ndarray) -> np.ndarray:
        """Positions at arc-length fractions ``t``."""
        p0, p1 = np.asarray(self.p0), np.asarray(self.p1)
        if self.arc is None:
            return p0 + np.asarray(t)[:, None] * (p1 - p0)
        return _arc_at(p0, p1, self.arc, np.asarray(t))


def _arc_at(p0, p1, arc: Arc, t: np.ndarray) -> np.ndarray:
    c = arc_center(p0, p1, arc)
    v = p0 - c
    ang = (-1.0 if arc.side == LEFT else 1.0) * arc.alpha * t
    cos, sin = np.cos(ang), np.sin(ang)
    pts = c + np.column_stack([v[0] * cos - v[1] * sin, v[0] * sin + v[1] * cos])
    pts[t == 0] = p0
    pts[t == 1] = p1
    return pts


@dataclass(frozen=True)
class PrintPath:
    elements: tuple
    crossings: tuple = ()  # arc-length positions where earlier material is crossed

    @property
    def length(self) -> float:
        return float(sum(e.length for e in self.elements))

    @property
    def vertices(self) -> list:
        if not self.elements:
            return []
        return [self.elements[0].start] + [e.end for e in self.elements]

    @property
    def edges(self) -> list:
        return [e.edge for e in self.elements]

    def polyline(self, tol: float = 0.1) -> tuple[np.ndarray, np.ndarray]:
        """Dense points along the whole path and cumulative arc length."""
        pts, s = [np.asarray(self.elements[0].p0, float)[None]], [np.zeros(1)]
        offset = 0.0
        for e in self.elements:
            p, d = e.sample(tol)
            pts.append(p[1:])
            s.append(offset + d[1:])
            offset += e.length
        return np.vstack(pts), np.concatenate(s)


@dataclass(frozen=True)
class PrintConfig:
    nozzle_diameter: float = 0.4
    layer_height: float = 0.2
    hop_lead: Optional[float] = None  # defaults to 1.5 x nozzle
    overlap: Optional[float] = None  # descent ends this much early; defaults to 0.2 x nozzle
    extrusion_ratio: float = MaterialModel().extrusion_ratio
    print_feed: float = 1200.0  # mm/min
    travel_feed: float = 6000.0
    travel_lift: float = 1.0  # mm above the layer during travel
    layers_per_edge: int = 1
    arc_mode: str = CHORDS
    chord_tolerance: float = 0.1
    nozzle_temp: float = 225.0
    bed_temp: float = 40.0
    header: str = DEFAULT_HEADER
    footer: str = DEFAULT_FOOTER

    def __post_init__(self):
        if self.hop_lead is None:
            object.__setattr__(self, "hop_lead", 1.5 * self.nozzle_diameter)
        if self.overlap is None:
            object.__setattr__(self, "overlap", 0.2 * self.nozzle_diameter)
        for name in ("nozzle_diameter", "layer_height", "extrusion_ratio", "print_feed",
                     "travel_feed", "chord_tolerance"):
            if not getattr(self, name) > 0:
                raise ValidationError(f"{name} must be positive")
        if self.hop_lead < 0 or self.overlap < 0 or self.overlap > self.hop_lead:
            raise ValidationError("need 0 <= overlap <= hop_lead")
        if int(self.layers_per_edge) != self.layers_per_edge or self.layers_per_edge < 1:
            raise ValidationError("layers_per_edge must be a positive integer")
        if self.arc_mode not in (CHORDS, NATIVE):
            raise ValidationError(f"arc_mode must be {CHORDS!r} or {NATIVE!r}")


# -- decomposition -------------------------------------------------------------

def _element(network: Network, k: int, start: int) -> PathElement:
    a, b = (int(v) for v in network.edges[k])
    end = b if start == a else a
    arc = network.arcs[k] if network.arcs is not None else None
    if arc is not None and start != a:
        arc = arc.flipped()
    x = network.vertices
    return PathElement(edge=k, start=start, end=end, p0=tuple(map(float, x[start])),
                       p1=tuple(map(float, x[end])), arc=arc)


def _trail(network: Network, start: int, used: np.ndarray, incident: list) -> list:
    """Walk unused edges from ``start``, turning as little as possible."""
    x = network.vertices
    out, v, heading = [], start, None
    while True:
        options = [k for k in incident[v] if not used[k]]
        if not options:
            return out
        if heading is None:
            k = min(options)
        else:
            def turn(k):
                a, b = network.edges[k]
                w = b if a == v else a
                d = x[w] - x[v]
                c = float(heading @ d) / (np.linalg.norm(d) + 1e-300)
                return (-c, k)
            k = min(options, key=turn)
        used[k] = True
        a, b = (int(u) for u in network.edges[k])
        w = b if a == v else a
        out.append((k, v, w))
        d = x[w] - x[v]
        heading = d / (np.linalg.norm(d) + 1e-300)
        v = w


def _splice(trails: list) -> list:
    """Insert closed trails into other trails through a shared vertex."""
    changed = True
    while changed:
        changed = False
        for i, t in enumerate(trails):
            if t[0][1] != t[-1][2]:
                continue
            verts = {s for _, s, _ in t}
            for j, host in enumerate(trails):
                if j == i:
                    continue
                hv = [host[0][1]] + [e for _, _, e in host]
                pos = next((p for p, v in enumerate(hv) if v in verts), None)
                if pos is None:
                    continue
                v = hv[pos]
                r = next(n for n, (_, s, _) in enumerate(t) if s == v)
                loop = t[r:] + t[:r]
                trails[j] = host[:pos] + loop + host[pos:]
                del trails[i]
                changed = True
                break
            if changed:
                break
    return trails


def decompose_paths(network: Network) -> list:
    """Cover every edge exactly once with as few continuous paths as possible.

    Trails start at odd-degree vertices (lowest index first) and extend along
    the straightest continuation; leftover closed trails are spliced into any
    path sharing a vertex.  Each connected component ends with max(1, odd/2)
    paths.  Paths are returned longest first.
    """
    m = network.n_edges
    if m == 0:
        return []
    incident = [[] for _ in range(network.n_vertices)]
    for k, (a, b) in enumerate(network.edges):
        incident[a].append(k)
        incident[b].append(k)
    used = np.zeros(m, bool)
    trails = []
    while not used.all():
        rem = np.zeros(network.n_vertices, np.int64)
        free = network.edges[~used]
        np.add.at(rem, free[:, 0], 1)
        np.add.at(rem, free[:, 1], 1)
        odd = np.flatnonzero(rem % 2 == 1)
        start = int(odd[0]) if odd.size else int(np.flatnonzero(rem > 0)[0])
        trails.append(_trail(network, start, used, incident))
    trails = _splice(trails)
    paths = [PrintPath(tuple(_element(network, k, s) for k, s, _ in t)) for t in trails]
    paths.sort(key=lambda p: (-round(p.length, 9), p.elements[0].edge))
    return paths


# -- crossings -------------------------------------------------------------------

def _segment_hits(P: np.ndarray, sP: np.ndarray, Q0: np.ndarray, Q1: np.ndarray,
                  eps: float = 1e-9) -> list:
    """Arc-length positions along polyline P where it meets segments Q0->Q1."""
    if not len(Q0) or len(P) < 2:
        return []
    p0, r = P[:-1], np.diff(P, axis=0)
    lo_p, hi_p = np.minimum(P[:-1], P[1:]), np.maximum(P[:-1], P[1:])
    lo_q, hi_q = np.minimum(Q0, Q1), np.maximum(Q0, Q1)
    t = Q1 - Q0
    out = []
    for i in range(len(p0)):
        keep = np.all((lo_q <= hi_p[i] + 1e-9) & (hi_q >= lo_p[i] - 1e-9), axis=1)
        j = np.flatnonzero(keep)
        if not j.size:
            continue
        qp = Q0[j] - p0[i]
        denom = r[i, 0] * t[j, 1] - r[i, 1] * t[j, 0]
        ok = np.abs(denom) > 1e-14
        with np.errstate(divide="ignore", invalid="ignore"):
            a = (qp[:, 0] * t[j, 1] - qp[:, 1] * t[j, 0]) / denom
            b = (qp[:, 0] * r[i, 1] - qp[:, 1] * r[i, 0]) / denom
        hit = ok & (a >= -eps) & (a <= 1 + eps) & (b >= -eps) & (b <= 1 + eps)
        for a_ in a[hit]:
            out.append(float(sP[i] + np.clip(a_, 0, 1) * (sP[i + 1] - sP[i])))
    return out


def annotate_crossings(paths: list, tol: float = 0.1) -> list:
    """Mark where each path passes over material from earlier paths.

    Crossings are the path's vertices already visited by an earlier path plus
    geometric intersections with earlier paths' edges.
    """
    out = []
    seen: set = set()
    prev0, prev1 = np.zeros((0, 2)), np.zeros((0, 2))
    for path in paths:
        if not path.elements:
            out.append(path)
            continue
        P, sP = path.polyline(tol)
        pos = []
        offset = 0.0
        verts = [(path.elements[0].start, 0.0)]
        for e in path.elements:
            offset += e.length
            verts.append((e.end, offset))
        vpts = np.array([path.elements[0].p0] + [e.p1 for e in path.elements])
        pos += [s for v, s in verts if v in seen]
        for s in _segment_hits(P, sP, prev0, prev1):
            # hits at the path's own vertices are shared-vertex crossings
            pt = _point_on(P, sP, s)
            if np.min(np.linalg.norm(vpts - pt, axis=1)) > 1e-6:
                pos.append(s)
        out.append(dataclasses.replace(path, crossings=_dedupe(pos)))
        seen.update(v for v, _ in verts)
        prev0 = np.vstack([prev0, P[:-1]])
        prev1 = np.vstack([prev1, P[1:]])
    return out


def _point_on(P, sP, s):
    return np.array([np.interp(s, sP, P[:, 0]), np.interp(s, sP, P[:, 1])])


def _dedupe(values, tol: float = 1e-9) -> tuple:
    out = []
    for v in sorted(values):
        if not out or v - out[-1] > tol:
            out.append(v)
    return tuple(out)


# -- z profile -------------------------------------------------------------------

def hop_profile(crossings, length: float, config: PrintConfig, path_id: int = 0):
    """Breakpoints ``(s, lift)`` of the piecewise-linear lift along a path.

    Each crossing ``c`` contributes a tent rising linearly over ``hop_lead``
    before ``c`` to one layer height and descending over ``hop_lead - overlap``
    after it; overlapping tents combine by their maximum.
    """
    h, lead = config.layer_height, config.hop_lead
    down = lead - config.overlap
    tents = []
    for c in crossings:
        up = lead
        if c < lead - 1e-12:
            log.warning("path %d: crossing at %.4f mm is closer than the %.2f mm hop lead "
                        "to the path start; lead clamped", path_id, c, lead)
            up = c
        tents.append((c - up, c, c + down))
    knots = {0.0, length}
    for l, c, r in tents:
        knots.update(v for v in (l, c, r) if 0.0 <= v <= length)
    # kinks where neighbouring tents intersect
    for (l1, c1, r1), (l2, c2, r2) in zip(tents, tents[1:]):
        if l2 < r1 and c2 > c1 and down > 0 and c2 > l2:
            # descending line of the first meets the rising line of the second
            s =(r1 * (c2 - l2) + l2 * down) / ((c2 - l2) + down)
            if 0.0 <= s <= length:
                knots.add(s)
    s = np.array(sorted(knots))
    return s, lift_at(s, tents, h)


def lift_at(s: np.ndarray, tents: list, h: float) -> np.ndarray:
    s = np.asarray(s, dtype=float)
    z = np.zeros_like(s)
    for l, c, r in tents:
        up = np.where(c > l, (s - l) / max(c - l, 1e-300), np.where(s >= c, 1.0, 0.0))
        dn = np.where(r > c, (r - s) / max(r - c, 1e-300), np.where(s <= c, 1.0, 0.0))
        tent = np.clip(np.minimum(up, dn), 0.0, 1.0)
        tent[(s < l) | (s > r)] = 0.0
        z = np.maximum(z, tent * h)
    return z


# -- emission -------------------------------------------------------------------

def _f(v: float, nd: int) -> str:
    s = f"{v:.{nd}f}"
    return "0." + "0" * nd if s == "-0." + "0" * nd else s


class _Writer:
    def __init__(self, config: PrintConfig):
        self.cfg = config
        self.lines: list[str] = []
        self.e = 0.0

    def extrude(self, p, z, ds, arc_cmd=None):
        self.e += ds * self.cfg.extrusion_ratio
        head = arc_cmd[0] if arc_cmd else "G1"
        words = [head, "X" + _f(p[0], 4), "Y" + _f(p[1], 4), "Z" + _f(z, 4)]
        if arc_cmd:
            words += ["I" + _f(arc_cmd[1][0], 4), "J" + _f(arc_cmd[1][1], 4)]
        words.append("E" + _f(self.e, 7))
        self.lines.append(" ".join(words))


def _element_moves(el: PathElement, s0: float, s_knots: np.ndarray, tol: float, native: bool):
    """(end point, arc-length end, native arc info) for moves along one element."""
    L = el.length
    inner = s_knots[(s_knots > s0 + 1e-12) & (s_knots < s0 + L - 1e-12)] - s0
    if el.arc is None:
        cuts = np.concatenate([inner, [L]])
        return [(el.point_at(np.array([c / L]))[0] if L > 0 else np.asarray(el.p1), s0 + c, None)
                for c in cuts]
    if native:
        cuts = np.concatenate([inner, [L]])
    else:
        _, d = el.sample(tol)
        cuts = np.union1d(d[1:], inner)
    pts = el.point_at(cuts / L)
    center = arc_center(np.asarray(el.p0), np.asarray(el.p1), el.arc)
    cmd = "G2" if el.arc.side == LEFT else "G3"
    return [(pts[i], s0 + c, (cmd, center) if native else None) for i, c in enumerate(cuts)]


def emit_gcode(paths: list, config: Optional[PrintConfig] = None) -> str:
    """G-code text for the annotated paths; absolute extrusion, deterministic."""
    config = config or PrintConfig()
    fields = {f.name: getattr(config, f.name) for f in dataclasses.fields(config)}
    w = _Writer(config)
    w.lines.append(config.header.format(**fields).rstrip("\n"))
    native = config.arc_mode == NATIVE
    for n, path in enumerate(paths):
        if not path.elements:
            continue
        L = path.length
        knots, lift = hop_profile(path.crossings, L, config, path_id=n)
        for layer in range(int(config.layers_per_edge)):
            z0 = config.layer_height * (layer + 1)
            start = path.elements[0].p0
            w.lines.append(f"; path {n} layer {layer} length {_f(L, 4)}")
            w.lines.append(f"G0 Z{_f(z0 + config.travel_lift, 4)} F{config.travel_feed:.0f}")
            w.lines.append(f"G0 X{_f(start[0], 4)} Y{_f(start[1], 4)}")
            w.lines.append(f"G0 Z{_f(z0 + float(np.interp(0.0, knots, lift)), 4)}")
            w.lines.append(f"G1 F{config.print_feed:.0f}")
            s0, s_prev = 0.0, 0.0
            for el in path.elements:
                for p, s_end, arc in _element_moves(el, s0, knots, config.chord_tolerance, native):
                    z = z0 + float(np.interp(s_end, knots, lift))
                    if arc is not None:
                        arc = (arc[0], arc[1] - _current_xy(w, el, s_prev, s0))
                    w.extrude(p, z, s_end - s_prev, arc)
                    s_prev = s_end
                s0 += el.length
    w.lines.append(config.footer.rstrip("\n"))
    return "\n".join(w.lines) + "\n"


def _current_xy(w: _Writer, el: PathElement, s_prev: float, s0: float) -> np.ndarray:
    # arc offsets I, J are relative to the move's start point
    t = (s_prev - s0) / el.length
    return el.point_at(np.array([min(max(t, 0.0), 1.0)]))[0]


def total_extrusion(gcode: str) -> float:
    """Final absolute E value in a G-code text (0 if nothing is extruded)."""
    e = 0.0
    for line in gcode.splitlines():
        if line.startswith(("G1 ", "G2 ", "G3 ")):
            for word in line.split():
                if word.startswith("E"):
                    e = float(word[1:])
    return e
