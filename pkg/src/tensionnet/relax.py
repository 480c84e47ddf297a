"""Turning the stretched design into its unstressed, printable counterpart.

Steps: Gauss-Seidel vertex relaxation toward the unstretched lengths, a global
shrink so no chord exceeds its target, exact correction of leaf edges, and
replacement of each remaining short chord by a circular arc of length ``l0``.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional

import numba
import numpy as np
from scipy.interpolate import CubicSpline

from .errors import ArcInfeasibleError, RelaxationDivergedError, ValidationError
from .netgraph import LEFT, Arc, Network, edge_lengths

log = logging.getLogger(__name__)

MIN_ARC_RATIO = 2.0 / math.pi
STRAIGHT_TOL = 1e-12
N_INTERP_NODES = 256


@dataclass
class RelaxConfig:
    beta: float = 0.1
    tau: float = 1e-6
    max_iter: int = 10_000
    # hold design anchors in place during relaxation; by default every vertex
    # moves, since anchors are only attached after printing
    pin_fixed: bool = False
    epsilon_history: list = field(default_factory=list)

    def __post_init__(self):
        if not (0 < self.beta <= 1):
            raise ValidationError("beta must lie in (0, 1]")
        if not self.tau > 0:
            raise ValidationError("tau must be positive")
        if self.max_iter < 1:
            raise ValidationError("max_iter must be at least 1")

    def write_history_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["iteration", "epsilon"])
            for k, eps in enumerate(self.epsilon_history):
                w.writerow([k, repr(float(eps))])


def relaxation_error(x: np.ndarray, edges: np.ndarray, l0: np.ndarray) -> float:
    """Sum of squared length residuals in units of the rms target length.

    ``sum((l1 - l0) ** 2) / mean(l0 ** 2)``.  Each edge update is a descent
    step on the unweighted sum, so this stays non-increasing for small beta,
    and the normalisation keeps ``tau`` independent of the drawing units.
    """
    if not len(l0):
        return 0.0
    l1 = np.linalg.norm(x[edges[:, 0]] - x[edges[:, 1]], axis=1)
    return float(np.sum((l1 - l0) ** 2) / np.mean(l0 ** 2))


@numba.njit(cache=True)
def _sweep(x, a, b, l0, beta, pinned):
    dim = x.shape[1]
    for k in range(a.shape[0]):
        i, j = a[k], b[k]
        l1 = 0.0
        for d in range(dim):
            l1 += (x[i, d] - x[j, d]) ** 2
        l1 = math.sqrt(l1)
        if l1 == 0.0:
            continue
        f = beta * (l0[k] - l1) / (2.0 * l1)
        for d in range(dim):
            step = f * (x[i, d] - x[j, d])
            if not pinned[i]:
                x[i, d] += step
            if not pinned[j]:
                x[j, d] -= step


def sweep_order(edges: np.ndarray) -> np.ndarray:
    return np.lexsort((edges[:, 1], edges[:, 0]))


def gauss_seidel_relax(network: Network, l0=None, config: Optional[RelaxConfig] = None) -> Network:
    """Move vertex pairs along their edges toward the target lengths.

    Each sweep visits edges in lexicographic ``(a, b)`` order and applies
    ``x_a += beta (l0 - l1) (x_a - x_b) / (2 l1)`` and the opposite step to
    ``x_b``.  A pinned endpoint drops its half-step.  Stops when the error
    changes by less than ``tau`` between sweeps or after ``max_iter`` sweeps.
    """
    config = config or RelaxConfig()
    l0 = _targets(network, l0)
    order = sweep_order(network.edges)
    a = np.ascontiguousarray(network.edges[order, 0])
    b = np.ascontiguousarray(network.edges[order, 1])
    l0s = np.ascontiguousarray(l0[order])
    pinned = np.array(network.fixed) if config.pin_fixed else np.zeros(network.n_vertices, bool)
    x = np.array(network.vertices, dtype=float)
    eps = relaxation_error(x, network.edges, l0)
    history = config.epsilon_history
    history.clear()
    history.append(eps)
    ceiling = 1e6 * (eps + 1.0)
    converged = False
    k = 0
    for k in range(1, config.max_iter + 1):
        _sweep(x, a, b, l0s, config.beta, pinned)
        new = relaxation_error(x, network.edges, l0)
        if not np.all(np.isfinite(x)) or not math.isfinite(new) or new > ceiling:
            raise RelaxationDivergedError(f"relaxation diverged; reduce β (sweep {k})")
        history.append(new)
        if abs(new - eps) < config.tau:
            eps = new
            converged = True
            break
        eps = new
    meta = {**network.meta, "relax": {"iterations": k, "epsilon": eps, "converged": converged,
                                      "beta": config.beta, "tau": config.tau}}
    return network.replace(vertices=x, l0=l0, arcs=None, meta=meta)


def _targets(network: Network, l0) -> np.ndarray:
    if l0 is None:
        if network.l0 is None:
            raise ValidationError("no target lengths: network carries no l0")
        l0 = network.l0
    l0 = np.asarray(l0, dtype=float)
    if l0.shape != (network.n_edges,):
        raise ValidationError("l0 must have one entry per edge")
    if np.any(~(l0 > 0)):
        raise ValidationError("target lengths must be positive")
    return l0


def scale_factor(l1: np.ndarray, l0: np.ndarray) -> float:
    """Largest ``s <= 1`` with ``s * l1 <= l0`` for every edge."""
    if np.any(~(l0 > 0)):
        raise ValidationError("target lengths must be positive")
    if not len(l1):
        return 1.0
    return float(min(1.0, np.min(l0 / l1)))


def movable_leaf_edges(network: Network, pinned=None) -> np.ndarray:
    """Mask of edges that ``fix_leaf_edges`` will set to their exact target."""
    deg = network.degree()
    leaf = deg == 1
    if pinned is not None:
        leaf &= ~np.asarray(pinned, bool)
    return leaf[network.edges[:, 0]] | leaf[network.edges[:, 1]]


def scale_network(network: Network, l0=None, exclude=None) -> tuple[Network, float]:
    """Shrink the whole network about the origin so every chord fits its target.

    Edges flagged in ``exclude`` do not constrain ``s``; use it for leaf edges
    that are corrected to their exact length afterwards.
    """
    l0 = _targets(network, l0)
    l1 = edge_lengths(network)
    keep = np.ones(network.n_edges, bool) if exclude is None else ~np.asarray(exclude, bool)
    s = scale_factor(l1[keep], l0[keep])
    meta = {**network.meta, "scale": s}
    return network.replace(vertices=network.vertices * s, l0=l0, meta=meta), s


def fix_leaf_edges(network: Network, l0=None, pinned=None) -> Network:
    """Slide every movable degree-1 vertex along its edge so the chord equals l0."""
    l0 = _targets(network, l0)
    pinned = np.zeros(network.n_vertices, bool) if pinned is None else np.asarray(pinned, bool)
    x = np.array(network.vertices)
    deg = network.degree()
    for k, (a, b) in enumerate(network.edges):
        for leaf, hub in ((b, a), (a, b)):
            if deg[leaf] != 1:
                continue
            if pinned[leaf]:
                log.warning("leaf vertex %d is pinned; edge %d left unchanged", leaf, k)
                continue
            d = x[leaf] - x[hub]
            x[leaf] = x[hub] + l0[k] * d / np.linalg.norm(d)
            break
    return network.replace(vertices=x)


# -- arc angle ---------------------------------------------------------------

def arc_ratio(alpha):
    """Chord-to-arc length ratio ``(2 / alpha) sin(alpha / 2)``; 1 at alpha = 0."""
    alpha = np.asarray(alpha, dtype=float)
    with np.errstate(invalid="ignore", divide="ignore"):
        r = np.where(alpha == 0, 1.0, 2.0 * np.sin(alpha / 2.0) / alpha)
    return float(r) if r.ndim == 0 else r


@lru_cache(maxsize=None)
def _interpolant() -> CubicSpline:
    # Spline alpha against u = sqrt(1 - ratio): alpha ~ sqrt(24) u near 0, so the
    # inverse is smooth in u where it has a square-root singularity in the ratio.
    k = np.arange(N_INTERP_NODES)
    alpha = 0.5 * math.pi * (1.0 - np.cos(math.pi * k / (N_INTERP_NODES - 1)))
    u = np.sqrt(1.0 - arc_ratio(alpha))
    return CubicSpline(u, alpha)


def _check_ratio(ratio: float) -> None:
    if not ratio > MIN_ARC_RATIO:
        raise ArcInfeasibleError(
            f"arc infeasible: ratio {ratio:.6f} is below minimum arc-to-chord ratio "
            f"{MIN_ARC_RATIO:.4f}")
    if ratio > 1.0:
        raise ValidationError(f"chord/arc ratio {ratio} exceeds 1")


def solve_arc_angle(ratio: float, refine: bool = True) -> float:
    """Arc angle ``alpha in [0, pi)`` whose chord/arc ratio equals ``ratio``.

    The cubic interpolant gives ~1e-6 rad; ``refine`` adds Newton steps so the
    trigonometric relation holds to round-off.
    """
    ratio = float(ratio)
    _check_ratio(ratio)
    if ratio >= 1.0 - STRAIGHT_TOL:
        return 0.0
    alpha = float(_interpolant()(math.sqrt(1.0 - ratio)))
    alpha = min(max(alpha, 0.0), math.pi)
    if refine:
        for _ in range(4):
            h = alpha / 2.0
            f = math.sin(h) / h - ratio
            df = (math.cos(h) / alpha) - 2.0 * math.sin(h) / alpha ** 2
            if df == 0.0:
                break
            step = f / df
            alpha = min(max(alpha - step, 1e-300), math.pi)
            if abs(step) < 1e-15:
                break
    return min(alpha, math.nextafter(math.pi, 0.0))


# -- arc geometry --------------------------------------------------------------

def arc_center(pa, pb, arc: Arc) -> np.ndarray:
    pa, pb = np.asarray(pa, float), np.asarray(pb, float)
    d = pb - pa
    c = np.linalg.norm(d)
    left = np.array([-d[1], d[0]]) / c
    h = arc.radius * math.cos(arc.alpha / 2.0)
    # a left bulge puts the center on the right of the chord
    return 0.5 * (pa + pb) - left * h if arc.side == LEFT else 0.5 * (pa + pb) + left * h


def arc_points(pa, pb, arc: Optional[Arc], n: int = 24) -> np.ndarray:
    """``n + 1`` points from ``pa`` to ``pb`` along the arc (or the chord)."""
    pa, pb = np.asarray(pa, float), np.asarray(pb, float)
    t = np.linspace(0.0, 1.0, n + 1)
    if arc is None or arc.alpha == 0.0:
        pts = pa + t[:, None] * (pb - pa)
        pts[0], pts[-1] = pa, pb
        return pts
    c = arc_center(pa, pb, arc)
    v = pa - c
    sign = -1.0 if arc.side == LEFT else 1.0
    ang = sign * arc.alpha * t
    cos, sin = np.cos(ang), np.sin(ang)
    pts = c + np.column_stack([v[0] * cos - v[1] * sin, v[0] * sin + v[1] * cos])
    pts[0], pts[-1] = pa, pb
    return pts


def _polylines_cross(P: np.ndarray, Q: np.ndarray, eps: float = 1e-9) -> bool:
    """Do two polylines that may share an endpoint intersect anywhere else?"""
    p0, r = P[:-1], np.diff(P, axis=0)
    q0, t = Q[:-1], np.diff(Q, axis=0)
    qp = q0[None, :, :] - p0[:, None, :]
    denom = r[:, None, 0] * t[None, :, 1] - r[:, None, 1] * t[None, :, 0]
    tn = qp[..., 0] * t[None, :, 1] - qp[..., 1] * t[None, :, 0]
    un = qp[..., 0] * r[:, None, 1] - qp[..., 1] * r[:, None, 0]
    ok = np.abs(denom) > 1e-14
    with np.errstate(divide="ignore", invalid="ignore"):
        a = tn / denom
        b = un / denom
    hit = ok & (a > -eps) & (a < 1 + eps) & (b > -eps) & (b < 1 + eps)
    # the segments touching a shared endpoint meet there by construction
    for pi, pv in ((0, P[0]), (-1, P[-1])):
        for qi, qv in ((0, Q[0]), (-1, Q[-1])):
            if np.allclose(pv, qv, rtol=0.0, atol=1e-9):
                hit[pi, qi] = False
    return bool(hit.any())


def edges_to_arcs(network: Network, l0=None, s: Optional[float] = None) -> list:
    """Arc (or ``None`` for a straight chord) per edge with arc length ``l0``.

    Sides are assigned greedily in edge order: left of the directed chord by
    default, flipped when the arc would cross an already-placed neighboring
    edge.  ``s`` is informational; the network is expected to be scaled already.
    """
    if network.dimension != 2:
        raise ValidationError("arcs require a 2D network")
    l0 = _targets(network, l0)
    x = network.vertices
    chords = edge_lengths(network)
    ratios = chords / l0
    arcs: list = [None] * network.n_edges
    for k, r in enumerate(ratios):
        if r > 1.0 and r <= 1.0 + 1e-9:
            r = 1.0
        try:
            alpha = solve_arc_angle(r)
        except ArcInfeasibleError as exc:
            raise ArcInfeasibleError(f"edge {k}: {exc}") from exc
        if alpha > 0.0:
            arcs[k] = Arc(radius=float(l0[k] / alpha), alpha=alpha, side=LEFT)

    incident: dict[int, list[int]] = {}
    for k, (a, b) in enumerate(network.edges):
        incident.setdefault(int(a), []).append(k)
        incident.setdefault(int(b), []).append(k)
    placed = np.zeros(network.n_edges, bool)
    placed[[k for k, arc in enumerate(arcs) if arc is None]] = True
    for k, arc in enumerate(arcs):
        if arc is None:
            continue
        a, b = network.edges[k]
        neighbours = sorted({j for v in (a, b) for j in incident[int(v)] if j != k and placed[j]})
        best = None
        for candidate in (arc, arc.flipped()):
            P = arc_points(x[a], x[b], candidate)
            hits = 0
            for j in neighbours:
                ja, jb = network.edges[j]
                if _polylines_cross(P, arc_points(x[ja], x[jb], arcs[j])):
                    hits += 1
            if hits == 0:
                best = candidate
                break
        if best is None:
            log.warning("edge %d: arc overlaps a neighbour on both sides", k)
            best = arc
        arcs[k] = best
        placed[k] = True
    return arcs


def printed_lengths(network: Network) -> np.ndarray:
    """Length of material laid down per edge: arc length, else the chord."""
    l = edge_lengths(network)
    if network.arcs is not None:
        for k, arc in enumerate(network.arcs):
            if arc is not None:
                l[k] = arc.length
    return l


@dataclass(frozen=True, eq=False)
class RelaxResult:
    network: Network  # relaxed, scaled, leaf-corrected, with arcs attached
    scale: float
    chords: np.ndarray  # s * l1 per edge after leaf correction
    arcs: tuple
    iterations: int
    epsilon: float
    epsilon_history: tuple


def relax_network(network: Network, l0=None, config: Optional[RelaxConfig] = None) -> RelaxResult:
    """Relax, scale, fix leaf edges and convert chords to arcs."""
    config = config or RelaxConfig()
    relaxed = gauss_seidel_relax(network, l0, config)
    pinned = network.fixed if config.pin_fixed else None
    scaled, s = scale_network(relaxed, exclude=movable_leaf_edges(relaxed, pinned))
    fixed_leaves = fix_leaf_edges(scaled, pinned=pinned)
    arcs = tuple(edges_to_arcs(fixed_leaves, s=s))
    final = fixed_leaves.replace(arcs=arcs)
    info = relaxed.meta["relax"]
    return RelaxResult(network=final, scale=s, chords=edge_lengths(final), arcs=arcs,
                       iterations=info["iterations"], epsilon=info["epsilon"],
                       epsilon_history=tuple(config.epsilon_history))
