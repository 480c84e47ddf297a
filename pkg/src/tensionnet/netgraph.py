"""Network data model shared by every stage of the pipeline.

A :class:`Network` is an immutable snapshot: vertices, the fixed/free partition,
undirected edges stored canonically as ``(a, b)`` with ``a < b``, per-edge force
densities and optional per-edge data attached by later stages (unstretched
length ``l0``, arc parameters, role tags).  Stages never mutate a network; they
return a new one via :meth:`Network.replace`.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional, Sequence

import numpy as np
import scipy.sparse as sp

from .errors import DegenerateEdgeError, UnanchoredNetworkError, ValidationError

CABLE = "cable"
STRUT = "strut"
LEFT = "left"
RIGHT = "right"


@dataclass(frozen=True)
class Arc:
    """Circular arc replacing a straight chord.

    ``side`` says which side of the directed chord ``a -> b`` the arc bulges to.
    """

    radius: float
    alpha: float
    side: str = LEFT

    @property
    def length(self) -> float:
        return self.radius * self.alpha

    def flipped(self) -> "Arc":
        return Arc(self.radius, self.alpha, RIGHT if self.side == LEFT else LEFT)


@dataclass(frozen=True)
class EdgeState:
    q: float
    kind: str = CABLE
    F: Optional[float] = None
    l: Optional[float] = None
    l0: Optional[float] = None
    l1: Optional[float] = None
    sigma: Optional[float] = None
    arc: Optional[Arc] = None


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Network:
    vertices: np.ndarray
    edges: np.ndarray
    fixed: np.ndarray
    q: np.ndarray
    kind: tuple = ()
    loads: Optional[np.ndarray] = None
    l0: Optional[np.ndarray] = None
    arcs: Optional[tuple] = None
    roles: Optional[tuple] = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        x = np.asarray(self.vertices, dtype=float)
        if x.ndim != 2 or (x.size and x.shape[1] not in (2, 3)):
            if x.size == 0:
                x = x.reshape(0, 2 if x.ndim < 2 else x.shape[1])
            else:
                raise ValidationError(f"vertices must be an (N, 2|3) array, got shape {x.shape}")
        n = len(x)
        e = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
        m = len(e)
        if m and (e.min() < 0 or e.max() >= n):
            raise ValidationError("edge references a vertex index out of range")
        if np.any(e[:, 0] == e[:, 1]):
            i = int(np.flatnonzero(e[:, 0] == e[:, 1])[0])
            raise ValidationError(f"edge {i} is a self-loop")
        if np.any(e[:, 0] > e[:, 1]):
            raise ValidationError("edges must be canonical (a < b); use Network.build")
        if m:
            _, counts = np.unique(e, axis=0, return_counts=True)
            if np.any(counts > 1):
                raise ValidationError("duplicate undirected edge")
        fixed = np.zeros(n, dtype=bool) if self.fixed is None else np.asarray(self.fixed, dtype=bool)
        if fixed.shape != (n,):
            raise ValidationError("fixed mask must have one entry per vertex")
        q = np.asarray(self.q, dtype=float).reshape(-1)
        if q.shape != (m,):
            raise ValidationError("q must have one entry per edge")
        kind = tuple(self.kind) if len(self.kind) else (CABLE,) * m
        if len(kind) != m or any(k not in (CABLE, STRUT) for k in kind):
            raise ValidationError("kind must be 'cable' or 'strut' per edge")
        loads = np.zeros_like(x) if self.loads is None else np.asarray(self.loads, dtype=float)
        if loads.shape != x.shape:
            raise ValidationError("loads must match the vertex array shape")
        object.__setattr__(self, "vertices", _frozen(x))
        object.__setattr__(self, "edges", _frozen(e))
        object.__setattr__(self, "fixed", _frozen(fixed))
        object.__setattr__(self, "q", _frozen(q))
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "loads", _frozen(loads))
        if self.l0 is not None:
            l0 = np.asarray(self.l0, dtype=float).reshape(-1)
            if l0.shape != (m,):
                raise ValidationError("l0 must have one entry per edge")
            object.__setattr__(self, "l0", _frozen(l0))
        if self.arcs is not None:
            if len(self.arcs) != m:
                raise ValidationError("arcs must have one entry per edge")
            object.__setattr__(self, "arcs", tuple(self.arcs))
        if self.roles is not None:
            if len(self.roles) != m:
                raise ValidationError("roles must have one entry per edge")
            object.__setattr__(self, "roles", tuple(self.roles))

    @classmethod
    def build(cls, vertices, edges, fixed=(), q=None, kind=None, loads=None,
              l0=None, arcs=None, roles=None, meta=None) -> "Network":
        """Build a network from loosely-typed input.

        ``edges`` may be in any orientation; they are canonicalised to ``a < b``
        (an arc's side is flipped along with its chord).  ``fixed`` is either a
        boolean mask or a list of vertex indices.
        """
        x = np.asarray(vertices, dtype=float)
        n = len(x)
        e = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        m = len(e)
        fixed = np.asarray(fixed)
        if fixed.dtype != bool or fixed.shape != (n,):
            mask = np.zeros(n, dtype=bool)
            idx = fixed.astype(np.int64).reshape(-1)
            if idx.size and (idx.min() < 0 or idx.max() >= n):
                raise ValidationError("fixed vertex index out of range")
            mask[idx] = True
            fixed = mask
        swap = e[:, 0] > e[:, 1]
        e = np.where(swap[:, None], e[:, ::-1], e)
        q = np.ones(m) if q is None else np.asarray(q, dtype=float)
        if arcs is not None:
            arcs = tuple(a.flipped() if (a is not None and s) else a for a, s in zip(arcs, swap))
        return cls(vertices=x, edges=e, fixed=fixed, q=q,
                   kind=tuple(kind) if kind is not None else (CABLE,) * m,
                   loads=loads, l0=l0, arcs=arcs,
                   roles=tuple(roles) if roles is not None else None,
                   meta=dict(meta or {}))

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def dimension(self) -> int:
        return self.vertices.shape[1]

    @property
    def is_strut(self) -> np.ndarray:
        return np.array([k == STRUT for k in self.kind], dtype=bool)

    def replace(self, **changes) -> "Network":
        return dataclasses.replace(self, **changes)

    def degree(self) -> np.ndarray:
        return np.bincount(self.edges.reshape(-1), minlength=self.n_vertices)

    def edge_state(self, i: int, *, F=None, l=None, sigma=None) -> EdgeState:
        a, b = self.edges[i]
        return EdgeState(
            q=float(self.q[i]), kind=self.kind[i], F=F, l=l, sigma=sigma,
            l0=None if self.l0 is None else float(self.l0[i]),
            l1=float(np.linalg.norm(self.vertices[a] - self.vertices[b])),
            arc=None if self.arcs is None else self.arcs[i],
        )

    def subnetwork(self, edge_mask) -> "Network":
        """Keep only the selected edges and the vertices they touch."""
        edge_mask = np.asarray(edge_mask, dtype=bool)
        e = self.edges[edge_mask]
        used = np.unique(e.reshape(-1))
        remap = -np.ones(self.n_vertices, dtype=np.int64)
        remap[used] = np.arange(len(used))
        pick = lambda seq: None if seq is None else tuple(np.asarray(seq, dtype=object)[edge_mask])
        return Network(
            vertices=self.vertices[used], edges=remap[e], fixed=self.fixed[used],
            q=self.q[edge_mask], kind=pick(self.kind), loads=self.loads[used],
            l0=None if self.l0 is None else self.l0[edge_mask],
            arcs=pick(self.arcs), roles=pick(self.roles),
            meta={**self.meta, "vertex_map": used.tolist()},
        )


@dataclass(frozen=True)
class Incidence:
    """Signed incidence of a network split by the fixed mask.

    ``C`` has one column per free vertex (in ``free`` order) and ``C_f`` one
    per fixed vertex.  Row ``i`` has +1 at the start and -1 at the end of edge i.
    """

    C: sp.csr_matrix
    C_f: sp.csr_matrix
    free: np.ndarray
    fixed: np.ndarray

    @property
    def full(self) -> sp.csr_matrix:
        return sp.hstack([self.C, self.C_f]).tocsr()


def build_connectivity(network: Network) -> Incidence:
    m, n = network.n_edges, network.n_vertices
    if m and not network.fixed.any():
        raise UnanchoredNetworkError("unanchored network: no fixed vertices")
    rows = np.repeat(np.arange(m), 2)
    cols = network.edges.reshape(-1)
    vals = np.tile([1.0, -1.0], m)
    Cs = sp.csr_matrix((vals, (rows, cols)), shape=(m, n))
    free = np.flatnonzero(~network.fixed)
    fixed = np.flatnonzero(network.fixed)
    return Incidence(C=Cs[:, free].tocsr(), C_f=Cs[:, fixed].tocsr(), free=free, fixed=fixed)


def edge_vectors(vertices: np.ndarray, edges: np.ndarray) -> np.ndarray:
    return vertices[edges[:, 0]] - vertices[edges[:, 1]]


def edge_lengths(network: Network, vertices: Optional[np.ndarray] = None) -> np.ndarray:
    x = network.vertices if vertices is None else vertices
    lengths = np.linalg.norm(edge_vectors(x, network.edges), axis=1)
    bad = np.flatnonzero(~(lengths > 0))
    if bad.size:
        raise DegenerateEdgeError(f"degenerate edge {int(bad[0])}: coincident endpoints")
    return lengths


# -- file format -------------------------------------------------------------

def network_to_dict(network: Network) -> dict[str, Any]:
    edges = []
    for i, (a, b) in enumerate(network.edges.tolist()):
        rec: dict[str, Any] = {"a": a, "b": b, "q": float(network.q[i]), "kind": network.kind[i]}
        if network.l0 is not None:
            rec["l0"] = float(network.l0[i])
        if network.arcs is not None and network.arcs[i] is not None:
            arc = network.arcs[i]
            rec["arc"] = {"R": float(arc.radius), "alpha": float(arc.alpha), "side": arc.side}
        if network.roles is not None and network.roles[i] is not None:
            rec["role"] = network.roles[i]
        edges.append(rec)
    doc: dict[str, Any] = {
        "dimension": network.dimension,
        "vertices": network.vertices.tolist(),
        "fixed": np.flatnonzero(network.fixed).tolist(),
        "edges": edges,
    }
    loaded = np.flatnonzero(np.any(network.loads != 0, axis=1))
    if loaded.size:
        doc["loads"] = [{"vertex": int(v), "vector": network.loads[v].tolist()} for v in loaded]
    if network.meta:
        doc["meta"] = network.meta
    return doc


def network_from_dict(doc: dict[str, Any]) -> Network:
    try:
        dim = int(doc["dimension"])
        verts = np.asarray(doc["vertices"], dtype=float).reshape(-1, dim)
        recs = doc["edges"]
        edges = [(int(r["a"]), int(r["b"])) for r in recs]
        q = [float(r.get("q", 1.0)) for r in recs]
        kind = [r.get("kind", CABLE) for r in recs]
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"malformed network document: {exc}") from exc
    if dim not in (2, 3):
        raise ValidationError(f"dimension must be 2 or 3, got {dim}")
    l0 = None
    if recs and all("l0" in r for r in recs):
        l0 = [float(r["l0"]) for r in recs]
    arcs = None
    if any("arc" in r for r in recs):
        arcs = [Arc(r["arc"]["R"], r["arc"]["alpha"], r["arc"].get("side", LEFT)) if "arc" in r else None
                for r in recs]
    roles = None
    if any("role" in r for r in recs):
        roles = [r.get("role") for r in recs]
    loads = np.zeros_like(verts)
    for rec in doc.get("loads", []):
        v = int(rec["vertex"])
        if not 0 <= v < len(verts):
            raise ValidationError(f"load on vertex {v} out of range")
        loads[v] += np.asarray(rec["vector"], dtype=float)
    return Network.build(verts, edges, fixed=np.asarray(doc.get("fixed", []), dtype=np.int64),
                         q=q, kind=kind, loads=loads, l0=l0, arcs=arcs, roles=roles,
                         meta=doc.get("meta"))


def load_network(path) -> Network:
    with open(path) as fh:
        return network_from_dict(json.load(fh))


def save_network(network: Network, path) -> Path:
    path = Path(path)
    path.write_text(json.dumps(network_to_dict(network), indent=1) + "\n")
    return path


def as_network(obj) -> Network:
    if isinstance(obj, Network):
        return obj
    if isinstance(obj, dict):
        return network_from_dict(obj)
    return load_network(obj)


def check_loads_on_free(network: Network) -> None:
    bad = np.flatnonzero(network.fixed & np.any(network.loads != 0, axis=1))
    if bad.size:
        raise ValidationError(f"load applied to fixed vertex {int(bad[0])}")


def canonical_pairs(pairs: Sequence[tuple[int, int]]) -> list[tuple[int, int]]:
    return [(min(a, b), max(a, b)) for a, b in pairs]
