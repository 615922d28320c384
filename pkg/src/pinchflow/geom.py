"""Discretized surfaces, conic degenerating metrics, plumbing coordinates.

A SurfaceComplex is a closed oriented quad-mesh assembled from rectangular
charts (flat torus squares and metric cylinders) with oriented edge
gluings.  Marked data: puncture cells, pinching-curve edge rings, and named
loops used for holonomy extraction.  A MetricGrid attaches per-cell areas
and per-edge conductances for a given (ell, kappa); everything is a pure
function of its inputs, so rebuilding with identical arguments is
bit-identical.

Conventions
-----------
* Torus charts cover [0,1)^2 with unit conformal factor, n x n cells.
* Cylinder charts cover x in [-1,1], y in [0,2*pi) periodic, with metric
  ds^2 = dx^2 + (ell + (1-ell)x^2) kappa^2 dy^2 and nx (odd) x ny cells.
* A face's counterclockwise boundary is (bottom, right, top^-1, left^-1).
* Oriented edges carry the transport from tail to head; paths are lists of
  (edge_id, sign).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import quad


class SingularPointError(ValueError):
    """Metric or curvature evaluated at a cone/pinch singularity."""


# ---------------------------------------------------------------------------
# conic cylinder closed forms
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConicCylinder:
    """Degenerating cylinder [-1,1] x S^1 with ds^2 = dx^2 + rho^2(x) dy^2."""

    kappa: float
    ell: float
    nx: int = 15
    ny: int = 16

    def __post_init__(self):
        if not 0.0 < self.kappa <= 1.0:
            raise ValueError(f"cone angle kappa={self.kappa} outside (0, 1]")
        if not 0.0 <= self.ell <= 1.0:
            raise ValueError(f"degeneration parameter ell={self.ell} outside [0, 1]")
        if self.nx < 4 or self.ny < 4:
            raise ValueError("grid resolution must be at least 4 cells per direction")


def metric_factor(cyl: ConicCylinder, x) -> np.ndarray:
    """rho^2(x) = (ell + (1-ell) x^2) kappa^2 for -1 <= x <= 1."""
    x = np.asarray(x, dtype=float)
    return (cyl.ell + (1.0 - cyl.ell) * x * x) * cyl.kappa**2


def metric_rho(cyl: ConicCylinder, x) -> np.ndarray:
    return np.sqrt(metric_factor(cyl, x))


def ricci_eigenvalue(cyl: ConicCylinder, x) -> np.ndarray:
    """Common eigenvalue R_1^1 = R_2^2 = -ell(1-ell)/(ell+(1-ell)x^2)^2."""
    x = np.asarray(x, dtype=float)
    u = cyl.ell + (1.0 - cyl.ell) * x * x
    if np.any(u == 0.0):
        raise SingularPointError("Ricci eigenvalue at the cone double point (ell=0, x=0)")
    return -cyl.ell * (1.0 - cyl.ell) / (u * u)


def cone_metric_factor(r, kappa: float):
    """Conformal density kappa^2 r^(2(kappa-1)) of the limiting cone metric."""
    if not 0.0 < kappa <= 1.0:
        raise ValueError(f"cone angle kappa={kappa} outside (0, 1]")
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0.0):
        raise SingularPointError("cone metric evaluated at the cone point r=0")
    return kappa**2 * r ** (2.0 * (kappa - 1.0))


def plumbing_epsilon(ell: float, kappa: float) -> float:
    """Closed-form plumbing parameter eps(ell) = [ell/(1+sqrt(1-ell))^2]^(1/(kappa*sqrt(1-ell))).

    Continuous limits: eps(0) = 0 and eps(1) = exp(-2/kappa).
    """
    if not 0.0 < kappa <= 1.0:
        raise ValueError(f"kappa={kappa} outside (0, 1]")
    if not 0.0 <= ell <= 1.0:
        raise ValueError(f"ell={ell} outside [0, 1]")
    if ell == 0.0:
        return 0.0
    s = np.sqrt(1.0 - ell)
    if s < 1e-9:
        return float(np.exp(-2.0 / kappa))
    return float(np.exp(np.log(ell / (1.0 + s) ** 2) / (kappa * s)))


def plumbing_map(cyl: ConicCylinder) -> tuple[Callable[[float], float], float]:
    """Conformal radius function f with d(log f)/dx = 1/(kappa*rho(x)), f(1)=1.

    Returns (f, eps) with eps = f(0)^2.  The map sends the half cylinder
    0 <= x <= 1 to the annulus sqrt(eps) <= |z| <= 1.
    """
    ell, kappa = cyl.ell, cyl.kappa
    if ell == 0.0:
        return (lambda x: float(np.asarray(x) ** (1.0 / kappa))), 0.0

    def f(x):
        x = np.asarray(x, dtype=float)
        s = np.sqrt(1.0 - ell)
        if s < 1e-9:
            return np.exp((x - 1.0) / kappa)
        core = (s * x + s * np.sqrt(x * x + ell / (1.0 - ell))) / (1.0 + s)
        return np.exp(np.log(core) / (kappa * s))

    return f, plumbing_epsilon(ell, kappa)


def plumbing_epsilon_quadrature(ell: float, kappa: float) -> float:
    """Independent eps via numerical integration of the conformal-radius ODE."""
    if ell == 0.0:
        return 0.0
    val, _ = quad(lambda x: 1.0 / (kappa * np.sqrt(ell + (1.0 - ell) * x * x)), 0.0, 1.0,
                  epsabs=1e-13, epsrel=1e-13)
    return float(np.exp(-2.0 * val))


# ---------------------------------------------------------------------------
# surface complexes
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Chart:
    """Rectangular grid chart.  kind is 'torus' (flat, [0,1)^2) or 'cylinder'."""

    name: str
    kind: str
    nx: int
    ny: int
    periodic_x: bool
    periodic_y: bool

    @property
    def dx(self) -> float:
        return (1.0 if self.kind == "torus" else 2.0) / self.nx

    @property
    def dy(self) -> float:
        return (1.0 if self.kind == "torus" else 2.0 * np.pi) / self.ny

    def x_of(self, i: float) -> float:
        return i * self.dx if self.kind == "torus" else -1.0 + i * self.dx

    def y_of(self, j: float) -> float:
        return j * self.dy


class _MeshBuilder:
    """Incremental vertex/edge/face assembly with gluing by vertex identification."""

    def __init__(self):
        self.parent: list[int] = []
        self.vertex_pos: list[tuple] = []   # (chart_idx, i, j) of the first occurrence
        self.edges: dict[tuple[int, int], int] = {}
        self.edge_tail: list[int] = []
        self.edge_head: list[int] = []
        self.edge_info: list[list[tuple]] = []   # occurrences (chart_idx, 'x'|'y', i, j)
        self.faces: list[tuple] = []             # (chart_idx, i, j)
        self.face_edges: list[list[int]] = []
        self.face_signs: list[list[int]] = []

    def new_vertex(self, pos) -> int:
        self.parent.append(len(self.parent))
        self.vertex_pos.append(pos)
        return len(self.parent) - 1

    def find(self, v: int) -> int:
        while self.parent[v] != v:
            self.parent[v] = self.parent[self.parent[v]]
            v = self.parent[v]
        return v

    def union(self, a: int, b: int):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[max(ra, rb)] = min(ra, rb)

    def edge(self, a: int, b: int, info) -> tuple[int, int]:
        """Get-or-create the edge between root vertices; returns (id, sign)."""
        a, b = self.find(a), self.find(b)
        if (a, b) in self.edges:
            e = self.edges[(a, b)]
            self.edge_info[e].append(info)
            return e, +1
        if (b, a) in self.edges:
            e = self.edges[(b, a)]
            self.edge_info[e].append(info)
            return e, -1
        e = len(self.edge_tail)
        self.edges[(a, b)] = e
        self.edge_tail.append(a)
        self.edge_head.append(b)
        self.edge_info.append([info])
        return e, +1


@dataclass
class SurfaceComplex:
    """Closed oriented quad mesh with marked punctures, pinch curves, loops."""

    topology: str
    charts: list[Chart]
    n_vertices: int
    edge_tail: np.ndarray
    edge_head: np.ndarray
    edge_chart: np.ndarray       # chart index of the primary occurrence
    edge_dir: np.ndarray         # 0 for x-edges, 1 for y-edges (primary occurrence)
    edge_cell: np.ndarray        # (E, 2) grid indices (i, j) of the primary occurrence
    edge_occurrences: list[list[tuple]]
    face_chart: np.ndarray
    face_cell: np.ndarray        # (F, 2)
    face_edges: np.ndarray       # (F, 4) ccw edge ids
    face_signs: np.ndarray       # (F, 4) ccw signs
    vertex_chart_pos: list[tuple]
    punctures: list[dict] = field(default_factory=list)
    pinching_curves: list[dict] = field(default_factory=list)
    loops: dict[str, list[tuple[int, int]]] = field(default_factory=dict)
    arcs: dict[str, list[tuple[int, int]]] = field(default_factory=dict)
    genus: int = 0
    meta: dict = field(default_factory=dict)

    # -- derived topology -------------------------------------------------

    @property
    def n_edges(self) -> int:
        return len(self.edge_tail)

    @property
    def n_faces(self) -> int:
        return len(self.face_chart)

    def euler_characteristic(self) -> int:
        return self.n_vertices - self.n_edges + self.n_faces

    def validate(self):
        """Closed oriented surface: every edge in exactly 2 faces, opposite signs."""
        signs: dict[int, list[int]] = {}
        for f in range(self.n_faces):
            for e, s in zip(self.face_edges[f], self.face_signs[f]):
                signs.setdefault(int(e), []).append(int(s))
        for e, ss in signs.items():
            if sorted(ss) != [-1, 1]:
                raise ValueError(f"edge {e} has inconsistent face incidences {ss}")
        if set(signs) != set(range(self.n_edges)):
            raise ValueError("dangling edges present")

    def excluded_faces(self, ell: float) -> np.ndarray:
        """Faces carrying zero weight: puncture cells, and pinch columns at ell=0."""
        out = [p["face"] for p in self.punctures]
        if ell == 0.0:
            for c in self.pinching_curves:
                out.extend(c["column_faces"])
        return np.array(sorted(set(out)), dtype=int)

    def frozen_edges(self, ell: float) -> np.ndarray:
        """Edges pinned during flows: puncture rings; node rings at ell=0."""
        out = []
        for p in self.punctures:
            out.extend(self.face_edges[p["face"]])
        if ell == 0.0:
            for c in self.pinching_curves:
                out.extend(e for e, _ in c["ring_left"])
                out.extend(e for e, _ in c["ring_right"])
        return np.array(sorted(set(out)), dtype=int)

    def face_components(self, ell: float) -> np.ndarray:
        """Label included faces by connected component of X* minus excluded cells.

        Components are joined across shared edges; at ell=0 the pinch column
        is excluded, which splits the complex along each pinching curve.
        Returns an int array over faces, -1 on excluded faces.
        """
        excluded = set(self.excluded_faces(ell).tolist())
        edge_faces: dict[int, list[int]] = {}
        for f in range(self.n_faces):
            if f in excluded:
                continue
            for e in self.face_edges[f]:
                edge_faces.setdefault(int(e), []).append(f)
        labels = -np.ones(self.n_faces, dtype=int)
        comp = 0
        for f0 in range(self.n_faces):
            if f0 in excluded or labels[f0] >= 0:
                continue
            stack = [f0]
            labels[f0] = comp
            while stack:
                f = stack.pop()
                for e in self.face_edges[f]:
                    for g in edge_faces.get(int(e), ()):
                        if labels[g] < 0:
                            labels[g] = comp
                            stack.append(g)
            comp += 1
        return labels

    # -- geometric helpers used by twists and gauge fixing ------------------

    def chart_vertex_coords(self, chart_idx: int) -> dict[int, tuple[float, float]]:
        """Map vertex id -> (x, y) chart coordinates for vertices of one chart."""
        out = {}
        for vid, occs in enumerate(self.vertex_chart_pos):
            for (ci, i, j) in occs:
                if ci == chart_idx:
                    ch = self.charts[ci]
                    out.setdefault(vid, (ch.x_of(i), ch.y_of(j)))
        return out


# ---------------------------------------------------------------------------
# topology builders
# ---------------------------------------------------------------------------


def _build_torus_chart(mb: _MeshBuilder, chart_idx: int, n: int,
                       hole: tuple[int, int, int] | None = None):
    """Add an n x n doubly periodic chart; optionally omit a k x k cell block.

    hole = (i0, j0, k).  Returns (vid grid, boundary ring of the hole as a
    ccw list of (edge, sign) starting at the hole's lower-left corner).
    """
    vid = np.empty((n, n), dtype=int)
    for i in range(n):
        for j in range(n):
            vid[i, j] = mb.new_vertex([(chart_idx, i, j)])

    def v(i, j):
        return vid[i % n, j % n]

    in_hole = np.zeros((n, n), dtype=bool)
    if hole is not None:
        i0, j0, k = hole
        in_hole[i0:i0 + k, j0:j0 + k] = True
        # interior vertices of the block do not exist on the glued surface;
        # they stay allocated but unreferenced (pruned in finalize).

    for i in range(n):
        for j in range(n):
            if in_hole[i, j]:
                continue
            e_b, s_b = mb.edge(v(i, j), v(i + 1, j), (chart_idx, "x", i, j))
            e_r, s_r = mb.edge(v(i + 1, j), v(i + 1, j + 1), (chart_idx, "y", i + 1, j))
            e_t, s_t = mb.edge(v(i, j + 1), v(i + 1, j + 1), (chart_idx, "x", i, j + 1))
            e_l, s_l = mb.edge(v(i, j), v(i, j + 1), (chart_idx, "y", i, j))
            mb.faces.append((chart_idx, i, j))
            mb.face_edges.append([e_b, e_r, e_t, e_l])
            mb.face_signs.append([s_b, s_r, -s_t, -s_l])
    ring = None
    if hole is not None:
        i0, j0, k = hole
        ring = []
        for t in range(k):        # bottom, left to right
            a, b = v(i0 + t, j0), v(i0 + t + 1, j0)
            ring.append(_lookup_edge(mb, a, b))
        for t in range(k):        # right side, bottom to top
            a, b = v(i0 + k, j0 + t), v(i0 + k, j0 + t + 1)
            ring.append(_lookup_edge(mb, a, b))
        for t in range(k):        # top, right to left
            a, b = v(i0 + k - t, j0 + k), v(i0 + k - t - 1, j0 + k)
            ring.append(_lookup_edge(mb, a, b))
        for t in range(k):        # left side, top to bottom
            a, b = v(i0, j0 + k - t), v(i0, j0 + k - t - 1)
            ring.append(_lookup_edge(mb, a, b))
    return vid, ring


def _lookup_edge(mb: _MeshBuilder, a: int, b: int) -> tuple[int, int]:
    a, b = mb.find(a), mb.find(b)
    if (a, b) in mb.edges:
        return mb.edges[(a, b)], +1
    if (b, a) in mb.edges:
        return mb.edges[(b, a)], -1
    raise KeyError("edge not present")


def _finalize(mb: _MeshBuilder, topology: str, charts: list[Chart], **marks) -> SurfaceComplex:
    # compress vertex ids to the used roots
    roots = sorted({mb.find(v) for pair in mb.edges for v in pair})
    remap = {r: i for i, r in enumerate(roots)}
    tail = np.array([remap[mb.find(t)] for t in mb.edge_tail], dtype=int)
    head = np.array([remap[mb.find(h)] for h in mb.edge_head], dtype=int)
    vertex_pos: list[list[tuple]] = [[] for _ in roots]
    for v, pos in enumerate(mb.vertex_pos):
        r = mb.find(v)
        if r in remap:
            vertex_pos[remap[r]].extend(pos)
    E = len(tail)
    echart = np.zeros(E, dtype=int)
    edir = np.zeros(E, dtype=int)
    ecell = np.zeros((E, 2), dtype=int)
    for e in range(E):
        ci, d, i, j = mb.edge_info[e][0]
        echart[e], edir[e] = ci, (0 if d == "x" else 1)
        ecell[e] = (i, j)
    return SurfaceComplex(
        topology=topology,
        charts=charts,
        n_vertices=len(roots),
        edge_tail=tail,
        edge_head=head,
        edge_chart=echart,
        edge_dir=edir,
        edge_cell=ecell,
        edge_occurrences=mb.edge_info,
        face_chart=np.array([f[0] for f in mb.faces], dtype=int),
        face_cell=np.array([[f[1], f[2]] for f in mb.faces], dtype=int),
        face_edges=np.array(mb.face_edges, dtype=int),
        face_signs=np.array(mb.face_signs, dtype=int),
        vertex_chart_pos=vertex_pos,
        **marks,
    )


def _face_index(surface_faces: list[tuple], chart_idx: int, i: int, j: int) -> int:
    return surface_faces.index((chart_idx, i, j))


def _row_loop(mb, vid, n, j, start_i: int = 0):
    """Closed loop of x-edges along row j based at (start_i, j)."""
    out = []
    for t in range(n):
        i = (start_i + t) % n
        a, b = vid[i, j % n], vid[(i + 1) % n, j % n]
        out.append(_lookup_edge(mb, a, b))
    return out


def _col_loop(mb, vid, n, i, start_j: int = 0):
    out = []
    for t in range(n):
        j = (start_j + t) % n
        a, b = vid[i % n, j], vid[i % n, (j + 1) % n]
        out.append(_lookup_edge(mb, a, b))
    return out


def _straight_path(mb, vid, n, p_from, p_to):
    """Grid path between waypoints sharing a row or column, steps of +-1 mod n."""
    (i1, j1), (i2, j2) = p_from, p_to
    out = []
    if j1 == j2:
        step = 1 if i2 >= i1 else -1
        for i in range(i1, i2, step):
            a, b = vid[i % n, j1 % n], vid[(i + step) % n, j1 % n]
            e, s = _lookup_edge(mb, a, b)
            out.append((e, s))
    elif i1 == i2:
        step = 1 if j2 >= j1 else -1
        for j in range(j1, j2, step):
            a, b = vid[i1 % n, j % n], vid[i1 % n, (j + step) % n]
            e, s = _lookup_edge(mb, a, b)
            out.append((e, s))
    else:
        raise ValueError("waypoints must share a row or column")
    return out


def _based(tail: list, loop: list) -> list:
    """tail + loop + tail reversed: rebases the loop at the tail's start."""
    return tail + loop + [(e, -s) for (e, s) in reversed(tail)]


def build_torus(n: int = 16) -> SurfaceComplex:
    """Flat torus: one doubly periodic chart over [0,1)^2."""
    mb = _MeshBuilder()
    charts = [Chart("t0", "torus", n, n, True, True)]
    vid, _ = _build_torus_chart(mb, 0, n)
    loops = {"a": _row_loop(mb, vid, n, 0, 0), "b": _col_loop(mb, vid, n, 0, 0)}
    surf = _finalize(mb, "torus", charts, loops=loops, genus=1)
    return surf


def build_one_holed_torus_punctured(n: int = 32) -> SurfaceComplex:
    """Torus with one marked puncture cell at the chart center.

    The puncture loop is the ccw ring around the marked cell; generator
    loops a (row) and b (column) pass through the basepoint row/column
    j = jp + n//2 and i = ip + n//2, away from the puncture.
    """
    if n < 8:
        raise ValueError("need n >= 8 for a puncture with twist annulus")
    mb = _MeshBuilder()
    charts = [Chart("t0", "torus", n, n, True, True)]
    vid, _ = _build_torus_chart(mb, 0, n)
    ip, jp = n // 2, n // 2
    faces = list(mb.faces)
    pface = faces.index((0, ip, jp))
    ring = []
    for (a, b) in (((ip, jp), (ip + 1, jp)), ((ip + 1, jp), (ip + 1, jp + 1)),
                   ((ip + 1, jp + 1), (ip, jp + 1)), ((ip, jp + 1), (ip, jp))):
        ring.append(_lookup_edge(mb, vid[a[0] % n, a[1] % n], vid[b[0] % n, b[1] % n]))
    # common basepoint diagonally opposite the puncture
    j0, i0 = (jp + n // 2) % n, (ip + n // 2) % n
    tail_p = _straight_path(mb, vid, n, (i0, j0), (ip, j0)) + \
        _straight_path(mb, vid, n, (ip, j0), (ip, jp))
    loops = {
        "a": _row_loop(mb, vid, n, j0, start_i=i0),
        "b": _col_loop(mb, vid, n, i0, start_j=j0),
        "p": _based(tail_p, ring),
    }
    punctures = [{
        "face": pface, "chart": 0,
        "center": ((ip + 0.5) / n, (jp + 0.5) / n),
        "ring": ring, "weight": None,
    }]
    return _finalize(mb, "one_holed_torus_punctured", charts,
                     loops=loops, punctures=punctures, genus=1)


def build_genus2_separating_pinch(n: int = 12, k: int = 4, nx_c: int = 15,
                                  ) -> SurfaceComplex:
    """Two torus charts joined by a conic cylinder through k x k corner holes.

    The separating pinching curve is the middle vertical ring of the
    cylinder; a puncture cell is marked at the center of the first torus
    chart.  ny of the cylinder is 4k to match the hole perimeter.
    """
    if nx_c % 2 == 0:
        raise ValueError("cylinder needs an odd number of x-cells (pinch column)")
    if k < 2 or n < 2 * k + 4:
        raise ValueError("hole too large or torus too small")
    ny_c = 4 * k
    mb = _MeshBuilder()
    charts = [
        Chart("t1", "torus", n, n, True, True),
        Chart("t2", "torus", n, n, True, True),
        Chart("c0", "cylinder", nx_c, ny_c, False, True),
    ]
    # corner holes keep them far from the chart-center punctures
    vid1, ring1 = _build_torus_chart(mb, 0, n, hole=(0, 0, k))
    vid2, ring2 = _build_torus_chart(mb, 1, n, hole=(0, 0, k))

    # cylinder grid: allocate, gluing boundary columns onto the hole rings.
    cvid = np.empty((nx_c + 1, ny_c), dtype=int)
    for i in range(nx_c + 1):
        for j in range(ny_c):
            cvid[i, j] = mb.new_vertex([(2, i, j)])
    # Glue x = -1 column to ring1 and x = +1 column to ring2.  Ring t starts
    # at the hole's lower-left corner and runs ccw (as seen in the torus
    # chart); traversing the cylinder boundary upward in y matches the ring
    # of t1 reversed (orientation: the glued surface stays oriented).
    ring1_v = _ring_vertices(mb, ring1)
    ring2_v = _ring_vertices(mb, ring2)
    for j in range(ny_c):
        mb.union(cvid[0, j], ring1_v[(-j) % ny_c])
        mb.union(cvid[nx_c, j], ring2_v[j % ny_c])

    def cv(i, j):
        return cvid[i, j % ny_c]

    for i in range(nx_c):
        for j in range(ny_c):
            e_b, s_b = mb.edge(cv(i, j), cv(i + 1, j), (2, "x", i, j))
            e_r, s_r = mb.edge(cv(i + 1, j), cv(i + 1, j + 1), (2, "y", i + 1, j))
            e_t, s_t = mb.edge(cv(i, j + 1), cv(i + 1, j + 1), (2, "x", i, j + 1))
            e_l, s_l = mb.edge(cv(i, j), cv(i, j + 1), (2, "y", i, j))
            mb.faces.append((2, i, j))
            mb.face_edges.append([e_b, e_r, e_t, e_l])
            mb.face_signs.append([s_b, s_r, -s_t, -s_l])

    faces = list(mb.faces)
    ip, jp = n // 2, n // 2
    pface = faces.index((0, ip, jp))
    pring = []
    for (a, b) in (((ip, jp), (ip + 1, jp)), ((ip + 1, jp), (ip + 1, jp + 1)),
                   ((ip + 1, jp + 1), (ip, jp + 1)), ((ip, jp + 1), (ip, jp))):
        pring.append(_lookup_edge(mb, vid1[a[0] % n, a[1] % n], vid1[b[0] % n, b[1] % n]))

    mid = nx_c // 2
    core = [_lookup_edge(mb, cv(mid, j), cv(mid, j + 1)) for j in range(ny_c)]
    ring_left = [_lookup_edge(mb, cv(mid, j), cv(mid, j + 1)) for j in range(ny_c)]
    ring_right = [_lookup_edge(mb, cv(mid + 1, j), cv(mid + 1, j + 1)) for j in range(ny_c)]
    column_faces = [faces.index((2, mid, j)) for j in range(ny_c)]

    # generator loops away from holes/punctures, all rebased at (icol, jrow)
    # of chart t1 through fixed tail paths (pair traces become genuine
    # conjugation invariants of the extracted representation).
    jrow = (jp + n // 4) % n
    icol = (ip + n // 4) % n

    def cyl_x_path(i_from, i_to, j):
        step = 1 if i_to >= i_from else -1
        return [_lookup_edge(mb, cv(i, j), cv(i + step, j))
                for i in range(i_from, i_to, step)]

    tail_p = _straight_path(mb, vid1, n, (icol, jrow), (ip, jrow)) + \
        _straight_path(mb, vid1, n, (ip, jrow), (ip, jp))
    tail_corner1 = _straight_path(mb, vid1, n, (icol, jrow), (0, jrow)) + \
        _straight_path(mb, vid1, n, (0, jrow), (0, 0))
    tail_mid = tail_corner1 + cyl_x_path(0, mid, 0)
    tail_t2 = tail_corner1 + cyl_x_path(0, nx_c, 0)
    tail_t2_base = tail_t2 + _straight_path(mb, vid2, n, (0, 0), (icol, 0)) + \
        _straight_path(mb, vid2, n, (icol, 0), (icol, jrow))
    loops = {
        "a1": _row_loop(mb, vid1, n, jrow, start_i=icol),
        "b1": _col_loop(mb, vid1, n, icol, start_j=jrow),
        "a2": _based(tail_t2_base, _row_loop(mb, vid2, n, jrow, start_i=icol)),
        "b2": _based(tail_t2_base, _col_loop(mb, vid2, n, icol, start_j=jrow)),
        "c": _based(tail_mid, core),
        "p": _based(tail_p, pring),
    }
    # short transverse arcs across the pinch (small half-width in x)
    arcs = {}
    w_arc = max(1, nx_c // 8)
    for j in range(ny_c):
        path = [_lookup_edge(mb, cv(i, j), cv(i + 1, j))
                for i in range(mid - w_arc, mid + w_arc + 1)]
        arcs[f"gamma{j}"] = path
    punctures = [{
        "face": pface, "chart": 0,
        "center": ((ip + 0.5) / n, (jp + 0.5) / n),
        "ring": pring, "weight": None,
    }]
    pinching = [{
        "name": "c", "core": core, "column_faces": column_faces,
        "ring_left": ring_left, "ring_right": ring_right,
        "chart": 2, "mid": mid,
    }]
    return _finalize(mb, "genus2_separating_pinch", charts,
                     loops=loops, arcs=arcs, punctures=punctures,
                     pinching_curves=pinching, genus=2,
                     meta={"hole_side": k, "n": n, "nx_c": nx_c})


def _ring_vertices(mb: _MeshBuilder, ring) -> list[int]:
    """Ordered vertex cycle underlying a ccw ring of (edge, sign)."""
    out = []
    for e, s in ring:
        out.append(mb.edge_tail[e] if s > 0 else mb.edge_head[e])
    return [mb.find(v) for v in out]


def build_surface(topology: str, **kw) -> SurfaceComplex:
    builders = {
        "torus": build_torus,
        "one_holed_torus_punctured": build_one_holed_torus_punctured,
        "genus2_separating_pinch": build_genus2_separating_pinch,
    }
    if topology not in builders:
        raise ValueError(f"unknown topology {topology!r}; expected one of {sorted(builders)}")
    return builders[topology](**kw)


# ---------------------------------------------------------------------------
# metric grids
# ---------------------------------------------------------------------------


@dataclass
class MetricGrid:
    """Per-cell areas and per-edge conductances for one (ell, kappa)."""

    surface: SurfaceComplex
    ell: float
    kappa: float
    face_area: np.ndarray        # 0 on excluded faces
    edge_conductance: np.ndarray # stiffness weight c_e; doubles as flow metric mass
    vertex_mass: np.ndarray
    total_area: float
    included: np.ndarray         # bool over faces

    def conformal_factor(self, face: int) -> float:
        """sigma with dA = sigma dx dy where a conformal chart exists."""
        ci = self.surface.face_chart[face]
        ch = self.surface.charts[ci]
        if ch.kind == "torus":
            return 1.0
        i, _ = self.surface.face_cell[face]
        x = ch.x_of(i + 0.5)
        return float(np.sqrt(metric_factor(ConicCylinder(self.kappa, self.ell), x)))


_GAUSS2 = (0.5 - 0.5 / np.sqrt(3.0), 0.5 + 0.5 / np.sqrt(3.0))


def metric_for(surface: SurfaceComplex, ell: float, kappa: float = 0.5) -> MetricGrid:
    """Attach ds_ell^2 to cylinder charts, the flat unit metric elsewhere.

    Cell areas integrate rho over the cell with 2-point Gauss quadrature in
    x.  Excluded cells (punctures; the pinch column at ell=0) get area 0.
    """
    if not 0.0 <= ell <= 1.0:
        raise ValueError(f"ell={ell} outside [0, 1]")
    surf = surface
    F, E = surf.n_faces, surf.n_edges
    area = np.zeros(F)
    cyl = ConicCylinder(kappa, ell)
    for f in range(F):
        ch = surf.charts[surf.face_chart[f]]
        i, j = surf.face_cell[f]
        if ch.kind == "torus":
            area[f] = ch.dx * ch.dy
        else:
            xs = [ch.x_of(i + g) for g in _GAUSS2]
            rho = 0.5 * sum(np.sqrt(metric_factor(cyl, x)) for x in xs)
            area[f] = rho * ch.dx * ch.dy

    excluded = surf.excluded_faces(ell)
    included = np.ones(F, dtype=bool)
    if len(excluded):
        included[excluded] = False
        area[excluded] = 0.0

    cond = np.zeros(E)
    for e in range(E):
        vals = []
        for (ci, d, i, j) in surf.edge_occurrences[e]:
            ch = surf.charts[ci]
            if ch.kind == "torus":
                vals.append(1.0)
            elif d == "x":
                rho = float(np.sqrt(metric_factor(cyl, ch.x_of(i + 0.5))))
                vals.append(rho * ch.dy / ch.dx)
            else:
                rho = float(np.sqrt(metric_factor(cyl, ch.x_of(i))))
                vals.append(ch.dx / (rho * ch.dy) if rho > 0 else 0.0)
        cond[e] = float(np.mean(vals))

    # quarter of each included cell's area to each of its 4 corners
    corner = np.zeros(surf.n_vertices)
    for f in range(F):
        if not included[f]:
            continue
        vs = set()
        for e in surf.face_edges[f]:
            vs.add(int(surf.edge_tail[e]))
            vs.add(int(surf.edge_head[e]))
        for v in vs:
            corner[v] += area[f] / 4.0
    vmass = corner

    return MetricGrid(
        surface=surf, ell=ell, kappa=kappa,
        face_area=area, edge_conductance=cond, vertex_mass=vmass,
        total_area=float(area.sum()), included=included,
    )


def metric_to_csv(metric: MetricGrid) -> str:
    """CSV export: chart, i, j, area."""
    lines = ["chart,i,j,area"]
    surf = metric.surface
    for f in range(surf.n_faces):
        ch = surf.charts[surf.face_chart[f]]
        i, j = surf.face_cell[f]
        lines.append(f"{ch.name},{i},{j},{metric.face_area[f]:.17g}")
    return "\n".join(lines) + "\n"
