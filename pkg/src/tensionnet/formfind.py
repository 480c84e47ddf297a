"""Linear force density form-finding."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .errors import FormFindingSingularError, UnanchoredNetworkError
from .netgraph import Network, build_connectivity, edge_lengths

PIVOT_RTOL = 1e-12


@dataclass(frozen=True, eq=False)
class FormFindResult:
    network: Network  # solved coordinates; topology, q and loads unchanged
    lengths: np.ndarray
    tensions: np.ndarray
    sigma: Optional[np.ndarray] = None

    @property
    def coordinates(self) -> np.ndarray:
        return self.network.vertices

    def with_area(self, area: float) -> "FormFindResult":
        return dataclasses.replace(self, sigma=self.tensions / area)

    def residuals(self) -> np.ndarray:
        """Per-vertex ``sum q (x_v - x_u) - p_v``; only free rows are meaningful."""
        return equilibrium_residual(self.network)


def equilibrium_residual(network: Network, vertices=None) -> np.ndarray:
    x = network.vertices if vertices is None else vertices
    a, b = network.edges[:, 0], network.edges[:, 1]
    f = network.q[:, None] * (x[a] - x[b])
    r = np.zeros_like(x)
    np.add.at(r, a, f)
    np.add.at(r, b, -f)
    return r - network.loads


def _factorize(D: sp.csc_matrix, spd: bool, free: np.ndarray):
    try:
        if spd:
            lu = splu(D, permc_spec="MMD_AT_PLUS_A", diag_pivot_thresh=0.0,
                      options={"SymmetricMode": True})
        else:
            lu = splu(D)
    except RuntimeError as exc:
        raise FormFindingSingularError(f"form-finding singular: {exc}") from exc
    u = np.abs(lu.U.diagonal())
    scale = u.max() if u.size else 1.0
    k = int(np.argmin(u)) if u.size else 0
    if u.size and u[k] < PIVOT_RTOL * scale:
        col = int(lu.perm_c[k]) if lu.perm_c is not None else k
        vertex = int(free[col])
        raise FormFindingSingularError(
            f"form-finding singular: relative pivot {u[k] / scale:.3e} at free vertex {vertex}",
            pivot=vertex)
    return lu


def solve_form(network: Network) -> FormFindResult:
    """Solve ``D x = p - D_f x_f`` for the free vertices, one factorisation for all axes."""
    if network.n_vertices and not network.fixed.any():
        raise UnanchoredNetworkError("unanchored network: form-finding needs a fixed vertex")
    inc = build_connectivity(network)
    x = np.array(network.vertices)
    if inc.free.size:
        Q = sp.diags(network.q)
        D = (inc.C.T @ Q @ inc.C).tocsc()
        D_f = inc.C.T @ Q @ inc.C_f
        diag = D.diagonal()
        iso = np.flatnonzero(diag == 0)
        if iso.size:
            v = int(inc.free[iso[0]])
            raise FormFindingSingularError(
                f"form-finding singular: free vertex {v} has zero total force density", pivot=v)
        rhs = network.loads[inc.free] - D_f @ x[inc.fixed]
        lu = _factorize(D, spd=bool(np.all(network.q > 0)), free=inc.free)
        x[inc.free] = lu.solve(np.ascontiguousarray(rhs))
    solved = network.replace(vertices=x)
    lengths = edge_lengths(solved)
    return FormFindResult(network=solved, lengths=lengths, tensions=network.q * lengths)


def edge_tensions(result: FormFindResult) -> np.ndarray:
    return result.network.q * result.lengths
