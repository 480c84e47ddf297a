"""Forward equilibrium of a network of unstretched edges, and length-error scoring.

Given rest lengths, material and anchors, find where the free vertices settle
and compare the realized edge lengths with the design.  Cables follow the
Ogden curve and go slack in compression; struts are a stiff linear spring.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import MatrixRankWarning, spsolve

from .errors import EquilibriumNotFoundError, ValidationError
from .material import MaterialModel, _nominal_stress
from .netgraph import Network, edge_lengths

log = logging.getLogger(__name__)

STRUT_EA = 1e4  # N, near-rigid compression members


@dataclass(frozen=True, eq=False)
class VerifyResult:
    coordinates: np.ndarray
    lengths: np.ndarray
    tensions: np.ndarray
    score: float  # mean relative length error against the reference lengths, %
    max_residual: float  # N, largest free-vertex force imbalance
    iterations: int
    method: str

    def report(self, reference_lengths: np.ndarray) -> dict:
        ref = np.asarray(reference_lengths, float)
        err = np.abs(self.lengths - ref) / ref * 100.0
        return {
            "score_percent": self.score,
            "max_residual_N": self.max_residual,
            "iterations": self.iterations,
            "method": self.method,
            "edges": [{"edge": k, "design": float(ref[k]), "realized": float(self.lengths[k]),
                       "tension": float(self.tensions[k]), "error_percent": float(err[k])}
                      for k in range(len(ref))],
        }


def score_error(designed, measured) -> float:
    """Mean ``|measured - designed| / designed`` in percent."""
    d = np.asarray(designed, dtype=float)
    m = np.asarray(measured, dtype=float)
    if d.shape != m.shape:
        raise ValidationError("designed and measured lengths differ in size")
    if not d.size:
        return 0.0
    if np.any(~(d > 0)):
        raise ValidationError("designed lengths must be positive")
    return float(np.mean(np.abs(m - d) / d) * 100.0)


class _Model:
    """Edge force law and its derivative for one network.

    Past the calibrated stretch the fitted Ogden curve turns over and would
    admit spurious equilibria, so cables continue linearly with the tangent
    at ``lambda_max``.
    """

    def __init__(self, network: Network, model: MaterialModel, l0: np.ndarray, strut_ea: float):
        self.strut = network.is_strut
        self.l0 = l0
        self.mu, self.alpha = model._mu, model._alpha
        self.A = model.area
        self.ea = strut_ea
        self.lam_max = model.lambda_max
        self.s_max = float(_nominal_stress(self.mu, self.alpha, self.lam_max))
        self.t_max = float(self._tangent(np.array([self.lam_max]))[0])

    def _tangent(self, lam):
        lt = lam[:, None]
        d = self.mu * ((self.alpha - 1) * lt ** (self.alpha - 2)
                       + (self.alpha / 2 + 1) * lt ** (-self.alpha / 2 - 2))
        return d.sum(axis=-1)

    def force(self, l: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        lam = l / self.l0
        F = np.zeros_like(l)
        dF = np.zeros_like(l)
        cable = ~self.strut
        taut = cable & (lam > 1.0) & (lam <= self.lam_max)
        if taut.any():
            F[taut] = self.A * _nominal_stress(self.mu, self.alpha, lam[taut])
            dF[taut] = self.A * self._tangent(lam[taut]) / self.l0[taut]
        over = cable & (lam > self.lam_max)
        if over.any():
            F[over] = self.A * (self.s_max + self.t_max * (lam[over] - self.lam_max))
            dF[over] = self.A * self.t_max / self.l0[over]
        s = self.strut
        F[s] = self.ea * (lam[s] - 1.0)
        dF[s] = self.ea / self.l0[s]
        return F, dF


def _residual(x, network, law, loads):
    a, b = network.edges[:, 0], network.edges[:, 1]
    d = x[a] - x[b]
    l = np.linalg.norm(d, axis=1)
    F, dF = law.force(l)
    f = (F / l)[:, None] * d
    r = np.zeros_like(x)
    np.add.at(r, a, f)
    np.add.at(r, b, -f)
    return r - loads, l, F, dF, d


def _rmax(r, free) -> float:
    return float(np.linalg.norm(r[free], axis=1).max(initial=0.0))


def _jacobian(network, free_index, l, F, dF, d, dim):
    a, b = network.edges[:, 0], network.edges[:, 1]
    u = d / l[:, None]
    outer = u[:, :, None] * u[:, None, :]
    K = dF[:, None, None] * outer + (F / l)[:, None, None] * (np.eye(dim) - outer)
    rows, cols, vals = [], [], []
    for (p, q, sign) in ((a, a, 1.0), (b, b, 1.0), (a, b, -1.0), (b, a, -1.0)):
        ip, iq = free_index[p], free_index[q]
        keep = (ip >= 0) & (iq >= 0)
        for i in range(dim):
            for j in range(dim):
                rows.append(ip[keep] * dim + i)
                cols.append(iq[keep] * dim + j)
                vals.append(sign * K[keep, i, j])
    n = int(free_index.max() + 1) * dim if free_index.max() >= 0 else 0
    return sp.csc_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                         shape=(n, n))


def _newton(x, network, law, loads, free, free_index, tol, max_iter):
    dim = x.shape[1]
    r, l, F, dF, d = _residual(x, network, law, loads)
    norm = _rmax(r, free)
    for it in range(max_iter):
        if norm <= tol:
            return x, it, True
        J = _jacobian(network, free_index, l, F, dF, d, dim)
        # a vertex held only by slack cables makes J singular; the caller falls back
        with np.errstate(all="ignore"), warnings.catch_warnings():
            warnings.simplefilter("error", MatrixRankWarning)
            try:
                step = spsolve(J, -r[free].reshape(-1))
            except (RuntimeError, MatrixRankWarning):
                return x, it, False
        if not np.all(np.isfinite(step)):
            return x, it, False
        step = step.reshape(-1, dim)
        t = 1.0
        while t > 1e-8:
            trial = x.copy()
            trial[free] += t * step
            rt = _residual(trial, network, law, loads)
            nt = _rmax(rt[0], free)
            if np.isfinite(nt) and nt < norm:
                x, (r, l, F, dF, d), norm = trial, rt, nt
                break
            t *= 0.5
        else:
            return x, it, False
    return x, max_iter, norm <= tol


def _dynamic_relaxation(x, network, law, loads, free, tol, max_iter):
    """Viscously damped pseudo-dynamics; slow but tolerant of slack edges."""
    v = np.zeros_like(x)
    for it in range(max_iter):
        r, l, F, dF, d = _residual(x, network, law, loads)
        if _rmax(r, free) <= tol:
            return x, it, True
        k = np.abs(dF) + np.abs(F) / l
        mass = np.zeros(len(x))
        np.add.at(mass, network.edges[:, 0], k)
        np.add.at(mass, network.edges[:, 1], k)
        mass = np.maximum(mass, 1e-12)
        v[free] = 0.9 * v[free] - r[free] / mass[free, None]
        x = x.copy()
        x[free] += 0.5 * v[free]
    return x, max_iter, False


def forward_equilibrium(network: Network, model: Optional[MaterialModel] = None, loads=None,
                        l0=None, *, tol: float = 1e-6, max_iter: int = 100,
                        reference_lengths=None, strut_ea: float = STRUT_EA) -> VerifyResult:
    """Solve for the free vertices of a network of rest lengths ``l0``.

    Starts from the network's own coordinates (the design) with anchors held
    there.  Damped Newton first, dynamic relaxation if Newton stalls, then
    Newton again to polish.  The score compares realized lengths with
    ``reference_lengths`` (default: the starting lengths).
    """
    model = model or MaterialModel()
    l0 = network.l0 if l0 is None else np.asarray(l0, float)
    if l0 is None or l0.shape != (network.n_edges,) or np.any(~(l0 > 0)):
        raise ValidationError("forward equilibrium needs a positive l0 per edge")
    loads = network.loads if loads is None else np.asarray(loads, float)
    if loads.shape != network.vertices.shape:
        raise ValidationError("loads must match the vertex array")
    ref = edge_lengths(network) if reference_lengths is None else np.asarray(reference_lengths)
    law = _Model(network, model, l0, strut_ea)
    free = np.flatnonzero(~network.fixed)
    free_index = np.full(network.n_vertices, -1)
    free_index[free] = np.arange(len(free))
    x = np.array(network.vertices, dtype=float)

    method = "newton"
    x, it, ok = _newton(x, network, law, loads, free, free_index, tol, max_iter)
    if not ok:
        log.info("Newton stalled after %d steps; falling back to dynamic relaxation", it)
        method = "dynamic-relaxation"
        x, it2, _ = _dynamic_relaxation(x, network, law, loads, free, tol, 200 * max_iter)
        x, it3, ok = _newton(x, network, law, loads, free, free_index, tol, max_iter)
        it += it2 + it3
    r, l, F, _, _ = _residual(x, network, law, loads)
    res = float(_rmax(r, free))
    if not ok or not np.isfinite(res):
        raise EquilibriumNotFoundError(f"equilibrium not found: max residual {res:.3e} N",
                                       residual=res)
    over = ~network.is_strut & (l / l0 > model.lambda_max)
    if over.any():
        log.warning("%d cable(s) settle beyond the calibrated stretch %.2f; forces there are "
                    "extrapolated", int(over.sum()), model.lambda_max)
    return VerifyResult(coordinates=x, lengths=l, tensions=F, score=score_error(ref, l),
                        max_residual=res, iterations=it, method=method)
