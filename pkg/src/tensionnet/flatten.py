"""Unrolling 3D networks onto the print bed and removing the crossings it creates."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import UnresolvableCrossingsError, ValidationError
from .netgraph import Network, edge_lengths

log = logging.getLogger(__name__)

CYLINDRICAL = "cylindrical"
SPHERICAL = "spherical"
PARAM_EPS = 1e-9


@dataclass(frozen=True)
class FlattenSpec:
    center: tuple = (0.0, 0.0, 0.0)
    axis: tuple = (0.0, 0.0, 1.0)
    mode: str = CYLINDRICAL

    def __post_init__(self):
        c = np.asarray(self.center, dtype=float).reshape(-1)
        t = np.asarray(self.axis, dtype=float).reshape(-1)
        if c.shape != (3,) or t.shape != (3,):
            raise ValidationError("center and axis must be 3-vectors")
        norm = np.linalg.norm(t)
        if not norm > 0:
            raise ValidationError("axis must be nonzero")
        object.__setattr__(self, "center", tuple(c.tolist()))
        object.__setattr__(self, "axis", tuple((t / norm).tolist()))
        if self.mode not in (CYLINDRICAL, SPHERICAL):
            raise ValidationError(f"unknown flatten mode {self.mode!r}")


def rotation_to_z(t) -> np.ndarray:
    """Smallest rotation taking unit vector ``t`` onto +z."""
    t = np.asarray(t, dtype=float)
    t = t / np.linalg.norm(t)
    z = np.array([0.0, 0.0, 1.0])
    k = np.cross(t, z)
    s = np.linalg.norm(k)
    c = float(t @ z)
    if s < 1e-15:
        if c > 0:
            return np.eye(3)
        # antiparallel: half turn about x
        return np.diag([1.0, -1.0, -1.0])
    k = k / s
    K = np.array([[0, -k[2], k[1]], [k[2], 0, -k[0]], [-k[1], k[0], 0]])
    return np.eye(3) + s * K + (1 - c) * (K @ K)


def flatten_coordinates(x: np.ndarray, spec: FlattenSpec) -> tuple[np.ndarray, float]:
    p = (np.asarray(x, dtype=float) - np.asarray(spec.center)) @ rotation_to_z(spec.axis).T
    rho = np.hypot(p[:, 0], p[:, 1])
    theta = np.arctan2(p[:, 1], p[:, 0])
    if spec.mode == CYLINDRICAL:
        r = rho
        if np.any(r < 1e-12):
            i = int(np.flatnonzero(r < 1e-12)[0])
            raise ValidationError(f"undefined angle: vertex {i} lies on the flattening axis")
        rbar = float(r.mean())
        return np.column_stack([theta * rbar, p[:, 2]]), rbar
    r = np.linalg.norm(p, axis=1)
    if np.any(r < 1e-12):
        i = int(np.flatnonzero(r < 1e-12)[0])
        raise ValidationError(f"undefined angle: vertex {i} coincides with the center")
    phi = np.arctan2(p[:, 2], rho)
    rbar = float(r.mean())
    return np.column_stack([theta * rbar, phi * rbar]), rbar


def flatten(network: Network, spec: FlattenSpec) -> Network:
    if network.dimension != 3:
        raise ValidationError("flatten requires 3D input")
    xy, rbar = flatten_coordinates(network.vertices, spec)
    meta = {**network.meta, "flatten": {"center": list(spec.center), "axis": list(spec.axis),
                                        "mode": spec.mode, "mean_radius": rbar}}
    return network.replace(vertices=xy, loads=None, arcs=None, meta=meta)


# -- crossings ---------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class CrossingReport:
    pairs: list  # (edge i, edge j, point) with i < j
    vertex_counts: np.ndarray
    centroid: np.ndarray = field(default_factory=lambda: np.zeros(2))

    def __len__(self):
        return len(self.pairs)

    def to_dict(self) -> dict:
        return {
            "crossings": [{"edges": [i, j], "point": list(map(float, p))} for i, j, p in self.pairs],
            "vertex_counts": self.vertex_counts.tolist(),
            "centroid": self.centroid.tolist(),
        }


def _cross(a, b):
    return a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]


def segment_crossings(P0: np.ndarray, P1: np.ndarray, edges: Optional[np.ndarray] = None,
                      eps: float = PARAM_EPS) -> list:
    """All interior crossings among segments ``P0[k] -> P1[k]``.

    Pairs sharing an endpoint index (when ``edges`` is given) are skipped.
    Collinear overlaps of positive length count as crossings.
    """
    P0 = np.asarray(P0, dtype=float)
    P1 = np.asarray(P1, dtype=float)
    R = P1 - P0
    rlen = np.linalg.norm(R, axis=1)
    lo = np.minimum(P0, P1)
    hi = np.maximum(P0, P1)
    out = []
    m = len(P0)
    for i in range(m - 1):
        j = np.arange(i + 1, m)
        # bounding-box reject
        keep = np.all((lo[j] <= hi[i] + 1e-9) & (hi[j] >= lo[i] - 1e-9), axis=1)
        if edges is not None:
            a, b = edges[i]
            ej = edges[j]
            keep &= (ej[:, 0] != a) & (ej[:, 0] != b) & (ej[:, 1] != a) & (ej[:, 1] != b)
        j = j[keep]
        if not j.size:
            continue
        p, r = P0[i], R[i]
        qs, s = P0[j], R[j]
        qp = qs - p
        denom = _cross(r, s)
        tnum = _cross(qp, s)
        unum = _cross(qp, r)
        par = np.abs(denom) <= 1e-12 * rlen[i] * rlen[j]
        with np.errstate(divide="ignore", invalid="ignore"):
            t = tnum / denom
            u = unum / denom
        hit = ~par & (t > eps) & (t < 1 - eps) & (u > eps) & (u < 1 - eps)
        for k in np.flatnonzero(hit):
            out.append((i, int(j[k]), p + t[k] * r))
        # collinear overlaps
        col = par & (np.abs(unum) <= 1e-9 * rlen[i])
        for k in np.flatnonzero(col):
            rr = r @ r
            t0 = qp[k] @ r / rr
            t1 = (qp[k] + s[k]) @ r / rr
            a0, a1 = max(0.0, min(t0, t1)), min(1.0, max(t0, t1))
            if a1 - a0 > eps:
                out.append((i, int(j[k]), p + 0.5 * (a0 + a1) * r))
    return out


def find_crossings(network: Network) -> CrossingReport:
    if network.dimension != 2:
        raise ValidationError("find_crossings requires a 2D network")
    x = network.vertices
    e = network.edges
    pairs = segment_crossings(x[e[:, 0]], x[e[:, 1]], edges=e)
    counts = np.zeros(network.n_vertices, dtype=np.int64)
    for i, j, _ in pairs:
        for v in (*e[i], *e[j]):
            counts[v] += 1
    centroid = x.mean(axis=0) if len(x) else np.zeros(2)
    return CrossingReport(pairs=pairs, vertex_counts=counts, centroid=centroid)


def resolve_crossings(network: Network, report: Optional[CrossingReport] = None, l0=None, *,
                      duplicate_distance_from: str = "mid", center: str = "centroid") -> Network:
    """Remove crossings by duplicating the vertex involved in the most of them.

    The duplicate is placed on the ray from the network center through the
    midpoint of the crossing edges' far endpoints, at the mean target length of
    those edges (measured from the midpoint, or from the center when
    ``duplicate_distance_from == "centroid"``).  ``center`` selects the ray
    origin: the vertex centroid or the coordinate origin.
    """
    if duplicate_distance_from not in ("mid", "centroid"):
        raise ValidationError("duplicate_distance_from must be 'mid' or 'centroid'")
    if center not in ("centroid", "origin"):
        raise ValidationError("center must be 'centroid' or 'origin'")
    if report is None:
        report = find_crossings(network)
    if not report.pairs:
        return network
    if l0 is None:
        l0 = network.l0 if network.l0 is not None else edge_lengths(network)
    l0 = np.asarray(l0, dtype=float)

    x = [row for row in np.array(network.vertices)]
    edges = np.array(network.edges)
    fixed = list(network.fixed)
    arcs = list(network.arcs) if network.arcs is not None else None
    origin = list(range(network.n_vertices))
    duplications = []
    cap = 4 * len(report.pairs)
    work = network
    while report.pairs:
        if len(duplications) >= cap:
            raise UnresolvableCrossingsError(
                f"unresolvable crossings: {len(report.pairs)} left after {cap} duplications")
        vc = int(np.argmax(report.vertex_counts))
        ec = sorted({k for i, j, _ in report.pairs for k in (i, j) if vc in edges[k]})
        far = [int(edges[k][0] if edges[k][1] == vc else edges[k][1]) for k in ec]
        X = np.asarray(x)
        mid = X[far].mean(axis=0)
        c = report.centroid if center == "centroid" else np.zeros(2)
        d = mid - c
        if np.linalg.norm(d) < 1e-12:
            d = mid - X[vc]
        d = d / np.linalg.norm(d)
        dist = float(np.mean(l0[ec]))
        base = mid if duplicate_distance_from == "mid" else c
        vn = len(x)
        x.append(base + dist * d)
        fixed.append(fixed[vc])
        origin.append(origin[vc])
        for k in ec:
            a, b = edges[k]
            a, b = (vn, b) if a == vc else (a, vn)
            if a > b:
                a, b = b, a
                if arcs is not None and arcs[k] is not None:
                    arcs[k] = arcs[k].flipped()
            edges[k] = (a, b)
        duplications.append((vc, vn))
        log.debug("duplicated vertex %d as %d for edges %s", vc, vn, ec)
        loads = np.zeros((len(x), network.dimension))
        loads[: network.n_vertices] = network.loads
        work = network.replace(vertices=np.asarray(x), edges=edges.copy(), fixed=np.asarray(fixed),
                               loads=loads, arcs=tuple(arcs) if arcs is not None else None)
        report = find_crossings(work)
    meta = {**network.meta,
            "duplications": [list(p) for p in network.meta.get("duplications", [])] +
                            [list(p) for p in duplications],
            "vertex_origin": origin}
    return work.replace(meta=meta)
