"""Parametric generators for the demonstration networks.

All force densities are in N/mm and lengths in mm.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .formfind import equilibrium_residual, solve_form
from .netgraph import CABLE, STRUT, Network

# Unit cell: vertices A..I, corners fixed, q labels are q * 1000.
UNIT_CELL_LABELS = "ABCDEFGHI"
UNIT_CELL_TEMPLATE = np.array([
    [-10, 10], [-5, 5], [0, 0], [5, -5], [10, -10],
    [-10, -10], [-5, -5], [5, 5], [10, 10]], dtype=float)
UNIT_CELL_EDGES = [
    ("A", "B", 11.1), ("B", "C", 4.03), ("C", "D", 4.03), ("D", "E", 13.1),
    ("F", "G", 12.1), ("G", "C", 3.02), ("C", "H", 5.03), ("H", "I", 12.1),
    ("B", "G", 3.52), ("G", "D", 4.53), ("D", "H", 4.03), ("H", "B", 4.03),
]
UNIT_CELL_FIXED = ("A", "E", "F", "I")


def gen_unit_cell(half_width: float = 10.0) -> Network:
    """The 9-vertex, 12-edge validation cell with its four corners anchored.

    Coordinates are the undeformed template; run ``solve_form`` to get the
    equilibrium.  ``half_width`` scales the template (10 mm by default).
    """
    idx = {c: i for i, c in enumerate(UNIT_CELL_LABELS)}
    edges = [(idx[a], idx[b]) for a, b, _ in UNIT_CELL_EDGES]
    q = [v / 1000.0 for _, _, v in UNIT_CELL_EDGES]
    roles = ["suspension" if (a in UNIT_CELL_FIXED or b in UNIT_CELL_FIXED) else "inner"
             for a, b, _ in UNIT_CELL_EDGES]
    return Network.build(UNIT_CELL_TEMPLATE * (half_width / 10.0), edges,
                         fixed=[idx[c] for c in UNIT_CELL_FIXED], q=q, roles=roles,
                         meta={"case": "unit-cell", "labels": list(UNIT_CELL_LABELS)})


# -- cylinder wrap -----------------------------------------------------------

@dataclass(frozen=True)
class CylinderWrapParams:
    n_x: int = 35  # vertical members
    n_y: int = 32  # horizontal members
    q0: float = 0.16
    dq: float = 0.076
    q_horizontal: float = 0.035
    radius: float = 25.0
    height: float = 90.0

    def __post_init__(self):
        if self.n_x < 2 or self.n_y < 2:
            raise ValidationError("n_x and n_y must be at least 2")
        if not (self.q0 > self.dq >= 0):
            raise ValidationError("need q0 > dq >= 0 so every vertical q is positive")
        if not (self.radius > 0 and self.height > 0 and self.q_horizontal > 0):
            raise ValidationError("radius, height and q_horizontal must be positive")


def wrap_force_density(params: CylinderWrapParams, i) -> np.ndarray:
    theta = 2.0 * np.pi * np.asarray(i) / params.n_x
    return params.q0 + params.dq * np.sin(theta)


def gen_cylinder_wrap(params: CylinderWrapParams = CylinderWrapParams()) -> Network:
    """Open n_x-by-n_y cable grid lying on a cylinder around the z axis.

    Column ``i`` carries ``q(theta_i)``; the columns are spread so the open
    seam sits at the +-pi branch cut of the unrolling.  Boundary vertices are
    fixed.  The free vertices receive the outward radial loads that the wrapped
    body exerts on the hoop members, so the grid on the cylinder is itself the
    force-density equilibrium.
    """
    nx, ny = params.n_x, params.n_y
    dphi = 2.0 * np.pi / nx
    phi = dphi * np.arange(nx) - np.pi * (nx - 1) / nx
    z = np.linspace(0.0, params.height, ny)
    vid = lambda i, j: i * ny + j
    x = np.array([[params.radius * math.cos(phi[i]), params.radius * math.sin(phi[i]), z[j]]
                  for i in range(nx) for j in range(ny)])
    edges, q, roles = [], [], []
    qv = wrap_force_density(params, np.arange(nx))
    for i in range(nx):
        for j in range(ny - 1):
            edges.append((vid(i, j), vid(i, j + 1)))
            q.append(float(qv[i]))
            roles.append("vertical")
    for j in range(ny):
        for i in range(nx - 1):
            edges.append((vid(i, j), vid(i + 1, j)))
            q.append(params.q_horizontal)
            roles.append("horizontal")
    fixed = np.zeros(len(x), dtype=bool)
    for i in range(nx):
        for j in range(ny):
            if i in (0, nx - 1) or j in (0, ny - 1):
                fixed[vid(i, j)] = True
    net = Network.build(x, edges, fixed=fixed, q=q, roles=roles,
                        meta={"case": "cylinder-wrap", "grid": [nx, ny]})
    loads = equilibrium_residual(net)
    loads[fixed] = 0.0
    return net.replace(loads=loads)


# -- expandable octahedron ---------------------------------------------------

@dataclass(frozen=True)
class OctahedronParams:
    strut_length: float = 80.0
    q_cable: float = 0.012
    q_strut: float = -0.018

    def __post_init__(self):
        if not self.strut_length > 0 or not self.q_cable > 0:
            raise ValidationError("strut_length and q_cable must be positive")
        if not math.isclose(-self.q_strut, 1.5 * self.q_cable, rel_tol=1e-9):
            raise ValidationError("unstable force-density ratio: need -q_strut = 1.5 q_cable")


OCTAHEDRON_STRUTS = [(0, 1), (2, 3), (4, 5), (10, 11), (6, 7), (8, 9)]
OCTAHEDRON_CABLES = [
    (6, 0), (0, 8), (0, 4), (0, 5), (2, 4), (2, 5), (2, 7), (2, 9),
    (4, 6), (4, 7), (5, 8), (5, 9), (1, 6), (6, 10), (1, 8), (8, 11),
    (7, 10), (3, 7), (9, 11), (3, 9), (1, 10), (3, 10), (1, 11), (3, 11),
]
OCTAHEDRON_ANCHORS = (0, 1, 4, 5)


def octahedron_template(strut_length: float) -> np.ndarray:
    """Three orthogonal pairs of parallel struts, offset by a quarter strut length."""
    a, b = strut_length / 4.0, strut_length / 2.0
    return np.array([
        [-a, 0, -b], [-a, 0, b], [a, 0, -b], [a, 0, b],
        [0, b, -a], [0, -b, -a],
        [-b, a, 0], [b, a, 0], [-b, -a, 0], [b, -a, 0],
        [0, b, a], [0, -b, a],
    ], dtype=float)


def gen_octahedron(params: OctahedronParams = OctahedronParams(), *, form_find: bool = True) -> Network:
    """Expandable octahedron: 6 struts and 24 cables on 12 vertices.

    The ends of two struts are anchored at template positions and the remaining
    eight vertices are form-found with the given force densities.
    """
    x = octahedron_template(params.strut_length)
    edges = OCTAHEDRON_STRUTS + OCTAHEDRON_CABLES
    q = [params.q_strut] * len(OCTAHEDRON_STRUTS) + [params.q_cable] * len(OCTAHEDRON_CABLES)
    kind = [STRUT] * len(OCTAHEDRON_STRUTS) + [CABLE] * len(OCTAHEDRON_CABLES)
    net = Network.build(x, edges, fixed=list(OCTAHEDRON_ANCHORS), q=q, kind=kind,
                        roles=kind, meta={"case": "octahedron"})
    if form_find:
        net = solve_form(net).network
    return net


# -- spiderweb ---------------------------------------------------------------

@dataclass(frozen=True)
class SpiderwebParams:
    n_radials: int = 8
    frame_radius: float = 40.0
    anchor_radius: float = 55.0
    hub_turns: float = 2.0
    hub_radii: tuple = (2.0, 5.0)
    catch_turns: float = 6.0
    catch_inner: float = 9.0  # fraction-free radii in mm; outer bound set by the frame
    uturn_radials: int = 3
    tension_ratio: tuple = (10.0, 7.0, 1.0)  # anchor : frame : radial
    radial_tension: float = 0.03  # N; sets the absolute tension level
    spiral_tension_ratio: float = 0.3  # hub and catching spiral, relative to radial
    # anchor threads of neighbouring frame vertices lean toward each other by
    # this fraction of the half sector angle (even radial counts only)
    anchor_skew: float = 0.85
    tune_iterations: int = 60

    def __post_init__(self):
        if self.n_radials < 3:
            raise ValidationError("a web needs at least 3 radials")
        tr = self.tension_ratio
        if len(tr) != 3 or min(tr) <= 0 or not (tr[0] >= tr[1] >= tr[2]):
            raise ValidationError("tension_ratio must be positive with anchor >= frame >= radial")
        if not (0 < self.hub_radii[0] < self.hub_radii[1] < self.catch_inner):
            raise ValidationError("need 0 < hub radii < catch_inner")
        if not self.anchor_radius > self.frame_radius > 0:
            raise ValidationError("need anchor_radius > frame_radius > 0")

    @property
    def catch_outer(self) -> float:
        return 0.8 * self.frame_radius * math.cos(math.pi / self.n_radials)


def _spiral_steps(n: int, turns: float, r0: float, r1: float, start: int, direction: int):
    steps = max(2, int(round(turns * n)))
    radii = np.linspace(r0, r1, steps)
    return [((start + direction * k) % n, float(r)) for k, r in enumerate(radii)]


def _web_topology(p: SpiderwebParams):
    n = p.n_radials
    ang = 2.0 * np.pi * np.arange(n) / n
    hub = _spiral_steps(n, p.hub_turns, p.hub_radii[0], p.hub_radii[1], 0, +1)
    catch_main = _spiral_steps(n, p.catch_turns, p.catch_inner,
                               p.catch_inner + (p.catch_outer - p.catch_inner) * 0.85, 0, +1)
    last = catch_main[-1][0]
    k = min(p.uturn_radials, n - 2)
    uturn = _spiral_steps(n, (k + 1) / n, catch_main[-1][1], p.catch_outer, last, -1)[1:]
    catch = catch_main + uturn

    verts = [np.zeros(2)]
    on_radial = [[(0.0, 0)] for _ in range(n)]  # (radius, vertex id)
    edges, roles = [], []

    def add(r, k):
        verts.append(np.array([r * math.cos(ang[k]), r * math.sin(ang[k])]))
        vid = len(verts) - 1
        on_radial[k].append((r, vid))
        return vid

    for spiral, role in ((hub, "hub"), (catch, "spiral")):
        prev = None
        for k, r in spiral:
            v = add(r, k)
            if prev is not None:
                edges.append((prev, v))
                roles.append(role)
            prev = v
    frame = [add(p.frame_radius, k) for k in range(n)]
    anchors = []
    for k in range(n):
        lean = p.anchor_skew * math.pi / n * (1 if k % 2 == 0 else -1) if n % 2 == 0 else 0.0
        verts.append(p.anchor_radius * np.array([math.cos(ang[k] + lean), math.sin(ang[k] + lean)]))
        anchors.append(len(verts) - 1)
    for k in range(n):
        chain = [vid for _, vid in sorted(on_radial[k])]
        for a, b in zip(chain[:-1], chain[1:]):
            edges.append((a, b))
            roles.append("radial")
    for k in range(n):
        edges.append((frame[k], frame[(k + 1) % n]))
        roles.append("frame")
    for k in range(n):
        edges.append((frame[k], anchors[k]))
        roles.append("anchor")
    return np.array(verts), edges, roles, anchors


def gen_spiderweb(params: SpiderwebParams = SpiderwebParams()) -> Network:
    """Planar orb web: hub spiral, catching spiral with a U-turn, radials,
    frame sections and anchor threads.

    One force density per role is rescaled until the mean form-found tension
    of each role hits its target: ``tension_ratio`` (anchor : frame : radial)
    around ``radial_tension``, with both spirals at ``spiral_tension_ratio``.
    A regular frame with radial anchors cannot carry 10:7:1, so neighbouring
    anchor threads lean toward each other and frame sections alternate
    between stronger and weaker tension.  Geometry parameters are
    illustrative defaults, not measured web data.
    """
    x, edges, roles, anchors = _web_topology(params)
    roles_arr = np.array(roles)
    tr = params.tension_ratio
    unit = params.radial_tension / tr[2]
    target = {"anchor": tr[0] * unit, "frame": tr[1] * unit, "radial": tr[2] * unit,
              "spiral": params.spiral_tension_ratio * params.radial_tension,
              "hub": params.spiral_tension_ratio * params.radial_tension}
    qrole = {"anchor": 0.1, "frame": 0.05, "radial": 0.02, "spiral": 0.01, "hub": 0.01}

    def densities():
        return np.array([qrole[r] for r in roles])

    net = Network.build(x, edges, fixed=anchors, q=densities(), roles=roles,
                        meta={"case": "spiderweb", "n_radials": params.n_radials})
    for _ in range(params.tune_iterations):
        res = solve_form(net.replace(q=densities()))
        for role, want in target.items():
            got = res.tensions[roles_arr == role].mean()
            # damped, bounded update keeps the shape from collapsing mid-tuning
            qrole[role] *= float(np.clip(math.sqrt(want / got), 0.8, 1.25))
    return solve_form(net.replace(q=densities())).network


def role_tensions(network: Network, tensions: np.ndarray) -> dict:
    roles = np.array(network.roles)
    return {r: float(tensions[roles == r].mean()) for r in dict.fromkeys(network.roles)}


CASES = {
    "unit-cell": lambda: gen_unit_cell(),
    "cylinder-wrap": lambda: gen_cylinder_wrap(),
    "octahedron": lambda: gen_octahedron(),
    "spiderweb": lambda: gen_spiderweb(),
}
