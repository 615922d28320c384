"""Lattice SU(2) connections: link fields, curvature, holonomy, twists.

Links are stored as unit quaternions, one per oriented mesh edge; reversing
orientation inverts the matrix.  The curvature of a face is the principal
log of the ordered counterclockwise boundary product; its density is
|log P|_F / cell area.

Marked puncture cells are excluded from curvature norms: the ring holonomy
around such a cell is the (distributional) holonomy of the singular model
connection, not smooth curvature, and its class is the puncture weight.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np
from scipy.integrate import quad

from . import su2
from .geom import MetricGrid, SurfaceComplex

TAU = np.array([0.0, 0.0, 1.0])  # diag(i, -i) direction, tau = sigma3


class StandardFormError(ValueError):
    """Field not flat and diagonal near the puncture where required."""


# ---------------------------------------------------------------------------
# link fields
# ---------------------------------------------------------------------------


@dataclass
class LinkField:
    """One SU(2) matrix per oriented edge of a SurfaceComplex."""

    surface: SurfaceComplex
    q: np.ndarray  # (E, 4) unit quaternions, tail -> head transport

    @classmethod
    def identity(cls, surface: SurfaceComplex) -> "LinkField":
        return cls(surface, su2.identity(surface.n_edges))

    @classmethod
    def random(cls, surface: SurfaceComplex, rng: np.random.Generator,
               scale: float = 1.0) -> "LinkField":
        """Links exp(i v.sigma) with Gaussian v of given scale."""
        return cls(surface, su2.exp_alg(su2.random_alg(rng, surface.n_edges, scale)))

    def copy(self) -> "LinkField":
        return LinkField(self.surface, self.q.copy())

    def link(self, e: int, sign: int = +1) -> np.ndarray:
        return self.q[e] if sign > 0 else su2.conj(self.q[e])

    def unitarity_defect(self) -> float:
        return float(np.abs(np.linalg.norm(self.q, axis=-1) - 1.0).max())

    def gauge_transform(self, g: np.ndarray) -> "LinkField":
        """U'_e = g(head) U_e g(tail)^-1 for vertex field g of shape (V, 4)."""
        surf = self.surface
        out = su2.mul(g[surf.edge_head], su2.mul(self.q, su2.conj(g[surf.edge_tail])))
        return LinkField(surf, su2.normalize(out))

    # -- plaquettes --------------------------------------------------------

    def plaquettes(self) -> np.ndarray:
        """(F, 4) boundary products, ccw, based at each face's first edge."""
        surf = self.surface
        V = np.where(
            (surf.face_signs[..., None] > 0),
            self.q[surf.face_edges],
            su2.conj(self.q[surf.face_edges]),
        )
        P = su2.mul(su2.mul(V[:, 3], V[:, 2]), su2.mul(V[:, 1], V[:, 0]))
        return su2.normalize(P)

    def plaquette(self, f: int) -> np.ndarray:
        return self.plaquettes()[f]


def plaquette_log(field: LinkField, f: int) -> np.ndarray:
    """Principal log of the face's ccw boundary product, as a 2x2 matrix."""
    v = su2.log_alg(field.plaquette(f))
    return 1j * np.einsum("k,kab->ab", v, su2._SIGMA)


@dataclass
class CurvatureField:
    """Per-face log angles/axes and densities |*F| = |log P|_F / area."""

    theta: np.ndarray      # (F,) rotation angles of the boundary products
    axis: np.ndarray       # (F, 3) unit axes (zero where theta ~ 0)
    density: np.ndarray    # (F,) |log P|_F / area on included faces, 0 elsewhere
    included: np.ndarray


def curvature(field: LinkField, metric: MetricGrid) -> CurvatureField:
    P = field.plaquettes()
    theta = su2.angle(P)
    vn = np.linalg.norm(P[..., 1:], axis=-1)
    axis = np.zeros((len(P), 3))
    ok = vn > 1e-14
    axis[ok] = P[ok, 1:] / vn[ok, None]
    density = np.zeros_like(theta)
    inc = metric.included
    density[inc] = np.sqrt(2.0) * theta[inc] / metric.face_area[inc]
    return CurvatureField(theta=theta, axis=axis, density=density, included=inc)


def curvature_norms(field: LinkField, metric: MetricGrid) -> tuple[float, float]:
    """(sup |*F|, L2 norm of *F): max density and sqrt(sum density^2 * area)."""
    # check branch on included faces only
    P = field.plaquettes()
    su2.log_alg(P[metric.included])
    cf = curvature(field, metric)
    sup = float(cf.density.max(initial=0.0))
    l2 = float(np.sqrt(np.sum(cf.density**2 * metric.face_area)))
    return sup, l2


# ---------------------------------------------------------------------------
# holonomy
# ---------------------------------------------------------------------------


def holonomy(field: LinkField, path: list[tuple[int, int]]) -> np.ndarray:
    """Ordered product of links along a path of (edge, sign), first edge first."""
    surf = field.surface
    q = su2.identity()
    pos = None
    for e, s in path:
        t, h = (surf.edge_tail[e], surf.edge_head[e]) if s > 0 else (surf.edge_head[e], surf.edge_tail[e])
        if pos is not None and t != pos:
            raise ValueError("path edges not consecutive")
        pos = h
        q = su2.mul(field.link(e, s), q)
    return su2.normalize(q)


def loop_trace(field: LinkField, name: str) -> float:
    return float(su2.trace(holonomy(field, field.surface.loops[name])))


# ---------------------------------------------------------------------------
# representations
# ---------------------------------------------------------------------------


@dataclass
class Representation:
    """Named marked-loop holonomies of a flat connection, modulo conjugation."""

    surface_topology: str
    matrices: dict[str, np.ndarray]   # loop name -> quaternion
    residual: float = 0.0

    def loop_names(self) -> list[str]:
        return sorted(self.matrices)

    def conjugate(self, g: np.ndarray) -> "Representation":
        mats = {k: su2.normalize(su2.mul(g, su2.mul(v, su2.conj(g))))
                for k, v in self.matrices.items()}
        return Representation(self.surface_topology, mats, self.residual)

    def puncture_weight(self) -> float:
        """alpha in [0, 1/2] with puncture holonomy conjugate to exp(2*pi*i*alpha*tau)."""
        if "p" not in self.matrices:
            raise KeyError("representation has no puncture loop")
        return float(su2.angle(self.matrices["p"]) / (2.0 * np.pi))

    def to_json_dict(self) -> dict:
        out = {"topology": self.surface_topology, "residual": self.residual, "loops": {}}
        for k, v in self.matrices.items():
            M = su2.to_matrix(v)
            out["loops"][k] = [float(x) for pair in
                               ((M[0, 0].real, M[0, 0].imag), (M[0, 1].real, M[0, 1].imag),
                                (M[1, 0].real, M[1, 0].imag), (M[1, 1].real, M[1, 1].imag))
                               for x in pair]
        return out

    @classmethod
    def from_json_dict(cls, d: dict) -> "Representation":
        mats = {}
        for k, v in d["loops"].items():
            M = np.array([[v[0] + 1j * v[1], v[2] + 1j * v[3]],
                          [v[4] + 1j * v[5], v[6] + 1j * v[7]]])
            mats[k] = su2.from_matrix(M)
        return cls(d["topology"], mats, d.get("residual", 0.0))


def conjugacy_invariants(rep: Representation, loop_names: list[str] | None = None) -> np.ndarray:
    """Traces of rep(l) and rep(l_i)rep(l_{i+1}) for consecutive pairs."""
    names = loop_names if loop_names is not None else rep.loop_names()
    vals = [su2.trace(rep.matrices[n]) for n in names]
    for a, b in zip(names, names[1:]):
        vals.append(su2.trace(su2.mul(rep.matrices[a], rep.matrices[b])))
    return np.array(vals, dtype=float)


def trace_distance(r1: Representation, r2: Representation,
                   loop_names: list[str] | None = None) -> float:
    names = loop_names if loop_names is not None else sorted(set(r1.loop_names()) & set(r2.loop_names()))
    v1 = conjugacy_invariants(r1, names)
    v2 = conjugacy_invariants(r2, names)
    return float(np.abs(v1 - v2).max())


def reducibility(rep: Representation, tol: float = 1e-8,
                 loop_names: list[str] | None = None) -> str:
    """'irreducible' | 'reducible' | 'central' from the joint commutant.

    Solves [M, rho(g)] = 0 over complex 2x2 M for all generators g; the
    commutant dimension is the nullity: 1 = irreducible, >= 2 reducible,
    4 with all generators central = central.
    """
    names = loop_names if loop_names is not None else rep.loop_names()
    mats = [su2.to_matrix(rep.matrices[n]) for n in names]
    rows = []
    I2 = np.eye(2)
    for U in mats:
        # vec(UM - MU) = (I (x) U - U^T (x) I) vec(M)
        rows.append(np.kron(I2, U) - np.kron(U.T, I2))
    A = np.vstack(rows) if rows else np.zeros((0, 4))
    s = np.linalg.svd(A, compute_uv=False) if len(A) else np.array([])
    nullity = int(np.sum(s <= tol)) + max(0, 4 - len(s)) if len(A) else 4
    if nullity >= 4:
        central = all(abs(abs(su2.trace(rep.matrices[n])) - 2.0) < tol for n in names)
        return "central" if central else "reducible"
    return "irreducible" if nullity == 1 else "reducible"


def commutant_dimension(rep: Representation, tol: float = 1e-8,
                        loop_names: list[str] | None = None) -> int:
    names = loop_names if loop_names is not None else rep.loop_names()
    mats = [su2.to_matrix(rep.matrices[n]) for n in names]
    I2 = np.eye(2)
    A = np.vstack([np.kron(I2, U) - np.kron(U.T, I2) for U in mats])
    s = np.linalg.svd(A, compute_uv=False)
    return int(np.sum(s <= tol))


_COMPONENT_LOOPS = {
    "torus": {"all": ["a", "b"]},
    "one_holed_torus_punctured": {"all": ["a", "b"]},
    "genus2_separating_pinch": {"t1": ["a1", "b1"], "t2": ["a2", "b2"]},
}


def accidental_reducibility(rep: Representation, surface: SurfaceComplex,
                            tol: float = 1e-8) -> tuple[dict[str, bool], bool]:
    """Per-component reducibility of the restriction; overall flag true iff all reducible.

    Components are those of the surface cut along its pinching curves; for
    surfaces without pinching curves the single component is the whole
    group.
    """
    comp = _COMPONENT_LOOPS[surface.topology]
    flags = {}
    for name, loops in comp.items():
        missing = [l for l in loops if l not in rep.matrices]
        if missing:
            raise KeyError(f"representation lacks component generators {missing}")
        flags[name] = reducibility(rep, tol, loop_names=loops) != "irreducible"
    return flags, all(flags.values())


# ---------------------------------------------------------------------------
# realization: representation -> flat link field
# ---------------------------------------------------------------------------


def connection_from_representation(rep: Representation, surface: SurfaceComplex,
                                   tol: float = 1e-10) -> LinkField:
    """Flat LinkField whose marked-loop holonomies reproduce rep up to conjugation.

    Torus charts use the seam construction (all links trivial except one
    row/column of crossings); defects land on marked cells.  The genus-2
    complex strings the puncture defect to the gluing hole and joins the
    two sides by a flat tube.
    """
    topo = surface.topology
    if topo == "torus":
        lf = _realize_torus(rep, surface)
    elif topo == "one_holed_torus_punctured":
        lf = _realize_punctured_torus(rep, surface)
    elif topo == "genus2_separating_pinch":
        lf = _realize_genus2(rep, surface)
    else:
        raise ValueError(f"no realization for topology {topo}")
    metric_free_check = curvature_residual(lf)
    if metric_free_check > tol:
        raise ValueError(f"realized field not flat: residual {metric_free_check:g} "
                         "(inconsistent representation)")
    return lf


def curvature_residual(field: LinkField) -> float:
    """Max plaquette angle over non-excluded faces (metric-free flatness check)."""
    surf = field.surface
    theta = su2.angle(field.plaquettes())
    excl = set(surf.excluded_faces(ell=1.0).tolist())
    mask = np.ones(surf.n_faces, dtype=bool)
    for f in excl:
        mask[f] = False
    return float(theta[mask].max(initial=0.0))


def _chart_edge_table(surface: SurfaceComplex, chart_idx: int) -> dict[tuple, int]:
    """(dir, i, j) -> edge id for one chart's occurrences."""
    out = {}
    for e in range(surface.n_edges):
        for (ci, d, i, j) in surface.edge_occurrences[e]:
            if ci == chart_idx:
                out[(d, i, j)] = e
    return out


def _set_chart_link(field: LinkField, table, d: str, i: int, j: int, q: np.ndarray,
                    surface: SurfaceComplex, chart_idx: int):
    """Set the transport in the chart's +x/+y direction across edge (d, i, j)."""
    e = table[(d, i, j)]
    field.q[e] = q if _edge_points_positive(surface, e, chart_idx, d) else su2.conj(q)


def _edge_points_positive(surface: SurfaceComplex, e: int, chart_idx: int, d: str) -> bool:
    """Does the canonical tail->head of e point along +x/+y of this chart?"""
    occ = [o for o in surface.edge_occurrences[e] if o[0] == chart_idx][0]
    _, _, i, j = occ
    ch = surface.charts[chart_idx]
    tail_pos = _vertex_chart_index(surface, int(surface.edge_tail[e]), chart_idx)
    if tail_pos is None:
        return True
    ti, tj = tail_pos
    mx = ch.nx if ch.periodic_x else ch.nx + 1
    my = ch.ny if ch.periodic_y else ch.ny + 1
    return (ti % mx) == (i % mx) and (tj % my) == (j % my)


def _vertex_chart_index(surface: SurfaceComplex, v: int, chart_idx: int):
    for (ci, i, j) in surface.vertex_chart_pos[v]:
        if ci == chart_idx:
            return (i, j)
    return None


def _realize_torus(rep: Representation, surface: SurfaceComplex) -> LinkField:
    A, B = rep.matrices["a"], rep.matrices["b"]
    if su2.angle(su2.mul(su2.mul(A, B), su2.conj(su2.mul(B, A)))) > 1e-10:
        raise ValueError("torus representation requires commuting holonomies")
    return _seam_field(surface, 0, A, B, i_seam=0, j_seam=0)


def _seam_field(surface: SurfaceComplex, chart_idx: int, A, B, i_seam: int, j_seam: int,
                base: LinkField | None = None) -> LinkField:
    """All links trivial except U_x(i_seam, j) = A and U_y(i, j_seam) = B."""
    lf = base if base is not None else LinkField.identity(surface)
    table = _chart_edge_table(surface, chart_idx)
    ch = surface.charts[chart_idx]
    for j in range(ch.ny):
        if ("x", i_seam, j) in table:
            _set_chart_link(lf, table, "x", i_seam, j, A, surface, chart_idx)
    for i in range(ch.nx):
        if ("y", i, j_seam) in table:
            _set_chart_link(lf, table, "y", i, j_seam, B, surface, chart_idx)
    return lf


def _realize_punctured_torus(rep: Representation, surface: SurfaceComplex) -> LinkField:
    A, B = rep.matrices["a"], rep.matrices["b"]
    n = surface.charts[0].nx
    ip, jp = n // 2, n // 2
    return _seam_field(surface, 0, A, B, i_seam=ip, j_seam=jp)


def _realize_genus2(rep: Representation, surface: SurfaceComplex) -> LinkField:
    A1, B1 = rep.matrices["a1"], rep.matrices["b1"]
    A2, B2 = rep.matrices["a2"], rep.matrices["b2"]
    n = surface.charts[0].nx
    k = surface.meta["hole_side"]
    ip, jp = n // 2, n // 2
    lf = LinkField.identity(surface)
    # seams through the marked cells so commutator defects land on them;
    # the k x k gluing hole sits at the chart corner (0..k-1)^2, so seams
    # through row jp and column ip do not touch it for n >= 2k+4.
    _seam_field(surface, 0, A1, B1, i_seam=ip, j_seam=jp, base=lf)
    _seam_field(surface, 1, A2, B2, i_seam=ip, j_seam=jp, base=lf)

    # Each seam leaves a commutator defect at its chart's cell (ip, jp).
    # Chart 1 (no puncture): push the whole defect to the gluing hole.
    # Chart 0: pin the puncture cell to the prescribed holonomy (when the
    # rep carries one) and push the remainder to the hole; the prescribed
    # value must make the two hole classes conjugate (surface relation).
    _string_path(lf, surface, 1, ip, jp, k, target=None)
    target = rep.matrices.get("p")
    _string_path(lf, surface, 0, ip, jp, k, target=target)

    # Flat tube: copy boundary rings and interpolate with one matching column.
    _match_tube(lf, surface)
    return lf


def _face_of(surface: SurfaceComplex, chart_idx: int, i: int, j: int) -> int:
    for f in range(surface.n_faces):
        if surface.face_chart[f] == chart_idx and tuple(surface.face_cell[f]) == (i, j):
            return f
    raise KeyError((chart_idx, i, j))


def _retune_face_edge(lf: LinkField, surface: SurfaceComplex, face: int, edge_slot: int,
                      target: np.ndarray):
    """Set one boundary edge so the face's ccw product becomes target.

    Writing the product as Suffix * V_slot * Prefix, solves for the new
    edge value; the removed holonomy reappears on the edge's other face.
    """
    edges = surface.face_edges[face]
    signs = surface.face_signs[face]
    V = [lf.link(int(e), int(s)) for e, s in zip(edges, signs)]
    pre = su2.identity()
    for t in range(edge_slot):
        pre = su2.mul(V[t], pre)
    suf = su2.identity()
    for t in range(edge_slot + 1, 4):
        suf = su2.mul(V[t], suf)
    # Suffix * Vnew * Prefix = target  =>  Vnew = Suffix^-1 target Prefix^-1
    Vnew = su2.normalize(su2.mul(su2.conj(suf), su2.mul(target, su2.conj(pre))))
    e, s = int(edges[edge_slot]), int(signs[edge_slot])
    lf.q[e] = Vnew if s > 0 else su2.conj(Vnew)


def _string_path(lf: LinkField, surface: SurfaceComplex, chart_idx: int,
                 ip: int, jp: int, k: int, target: np.ndarray | None):
    """Move the defect at cell (ip, jp) into the corner hole along an L path.

    If target is given, the cell keeps exactly that boundary holonomy and
    only the remainder travels; the defect enters the hole through the
    left edge of cell (k, k-1), changing the hole ring class.
    """
    # slot order in each face: 0 bottom, 1 right, 2 top, 3 left (ccw)
    first = su2.normalize(target) if target is not None else su2.identity()
    _retune_face_edge(lf, surface, _face_of(surface, chart_idx, ip, jp), 0, first)
    for j in range(jp - 1, k - 1, -1):
        _retune_face_edge(lf, surface, _face_of(surface, chart_idx, ip, j), 0,
                          su2.identity())
    for i in range(ip, k - 1, -1):
        _retune_face_edge(lf, surface, _face_of(surface, chart_idx, i, k - 1), 3,
                          su2.identity())


def _match_tube(lf: LinkField, surface: SurfaceComplex):
    """Make the cylinder flat given its glued boundary rings.

    With U_x = I on all but the last column, flatness forces U_y(i+1, j) =
    U_y(i, j); the last column of x-links G_j absorbs the conjugation
    between the propagated left ring and the right ring:
        R_j = G_{j+1} L_j G_j^{-1}.
    The cycle closes because the two ring products are conjugate in SU(2).
    """
    ci = 2
    table = _chart_edge_table(surface, ci)
    ch = surface.charts[ci]
    nx, ny = ch.nx, ch.ny

    def get(d, i, j):
        e = table[(d, i, j % ny)]
        sgn = +1 if _edge_points_positive(surface, e, ci, d) else -1
        return lf.q[e] if sgn > 0 else su2.conj(lf.q[e])

    def setq(d, i, j, q):
        e = table[(d, i, j % ny)]
        sgn = +1 if _edge_points_positive(surface, e, ci, d) else -1
        lf.q[e] = q if sgn > 0 else su2.conj(q)

    L = [get("y", 0, j) for j in range(ny)]
    R = [get("y", nx, j) for j in range(ny)]
    WL = _ring_product(L)
    WR = _ring_product(R)
    G0 = _conjugator(WL, WR)
    # interior: copy left ring across; interior x-links trivial
    for i in range(1, nx):
        for j in range(ny):
            setq("y", i, j, L[j])
    for i in range(nx - 1):
        for j in range(ny):
            setq("x", i, j, su2.identity())
    G = G0
    for j in range(ny):
        setq("x", nx - 1, j, G)
        # R_j = G_{j+1} L_j G_j^{-1}  =>  G_{j+1} = R_j^{-1}... solve forward:
        G = su2.normalize(su2.mul(su2.mul(R[j], G), su2.conj(L[j])))


def _ring_product(links: list[np.ndarray]) -> np.ndarray:
    q = su2.identity()
    for u in links:
        q = su2.mul(u, q)
    return su2.normalize(q)


def _conjugator(WL: np.ndarray, WR: np.ndarray) -> np.ndarray:
    """G with WR = G WL G^{-1}; requires conjugate inputs (equal traces).

    Ad of exp(i t n.sigma) rotates algebra vectors by -2t about n, so the
    rotation taking axis(WL) to axis(WR) by angle psi uses t = -psi/2.
    """
    if abs(su2.trace(WL) - su2.trace(WR)) > 1e-8:
        raise ValueError("boundary ring holonomies not conjugate; inconsistent rep")
    vL, vR = WL[1:], WR[1:]
    nL, nR = np.linalg.norm(vL), np.linalg.norm(vR)
    if nL < 1e-12 or nR < 1e-12:
        return su2.identity()
    aL, aR = vL / nL, vR / nR
    c = np.cross(aL, aR)
    d = float(np.dot(aL, aR))
    if np.linalg.norm(c) < 1e-14:
        if d > 0:
            return su2.identity()
        # antipodal axes: rotate by pi about any orthogonal axis
        perp = np.cross(aL, [1.0, 0.0, 0.0])
        if np.linalg.norm(perp) < 1e-7:
            perp = np.cross(aL, [0.0, 1.0, 0.0])
        perp /= np.linalg.norm(perp)
        return su2.exp_alg(np.pi / 2.0 * perp)
    axis = c / np.linalg.norm(c)
    half = -0.5 * np.arctan2(np.linalg.norm(c), d)
    return su2.exp_alg(half * axis)


def extract_representation(field: LinkField, tol: float = 1e-8) -> Representation:
    """Marked-loop holonomies of a flat field, with flatness residual."""
    surf = field.surface
    mats = {name: holonomy(field, path) for name, path in surf.loops.items()}
    res = curvature_residual(field)
    return Representation(surf.topology, mats, residual=res)


# ---------------------------------------------------------------------------
# representation factories
# ---------------------------------------------------------------------------


def _commutator_word(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """B^-1 A^-1 B A: the seam construction's defect value."""
    return su2.normalize(su2.mul(su2.conj(B), su2.mul(su2.conj(A), su2.mul(B, A))))


def _class_element(theta: float, axis: np.ndarray) -> np.ndarray:
    axis = np.asarray(axis, dtype=float)
    axis = axis / np.linalg.norm(axis)
    return su2.exp_alg(theta * axis)


def _solve_defect(W1: np.ndarray, W2: np.ndarray, alpha: float) -> np.ndarray:
    """D with angle 2*pi*alpha and tr(W1 D^-1) = tr(W2), in closed form.

    Writing W1 = (cos t1, sin t1 n1) and D = (cos tD, sin tD nD), the trace
    condition fixes n1.nD; the axis is completed in the plane spanned by n1
    and a fixed orthogonal direction.
    """
    t1 = float(su2.angle(W1))
    t2 = float(su2.angle(W2))
    tD = 2.0 * np.pi * alpha
    if not 0.0 < tD < np.pi:
        raise ValueError("alpha must lie in (0, 1/2)")
    if np.sin(t1) < 1e-12:
        if abs(np.cos(t1) * np.cos(tD) - np.cos(t2)) > 1e-10:
            raise ValueError("no defect with the requested weight exists (W1 central)")
        return _class_element(tD, TAU)
    c = (np.cos(t2) - np.cos(t1) * np.cos(tD)) / (np.sin(t1) * np.sin(tD))
    if abs(c) > 1.0 + 1e-12:
        raise ValueError(
            f"weight alpha={alpha} incompatible with the handle holonomies "
            f"(needed axis cosine {c:.3f})")
    c = float(np.clip(c, -1.0, 1.0))
    n1 = W1[1:] / np.linalg.norm(W1[1:])
    perp = np.cross(n1, [0.0, 0.0, 1.0])
    if np.linalg.norm(perp) < 1e-8:
        perp = np.cross(n1, [1.0, 0.0, 0.0])
    perp /= np.linalg.norm(perp)
    nD = c * n1 + np.sqrt(max(0.0, 1.0 - c * c)) * perp
    # tr(W1 D^-1)/2 = cos t1 cos tD + sin t1 sin tD (n1 . nD)
    return _class_element(tD, nD)


def punctured_torus_rep(alpha: float, kind: str = "generic") -> Representation:
    """Reps of the once-punctured torus with puncture weight alpha.

    kind 'dihedral': holonomies in the normalizer of the diagonal torus
    (a = exp(i pi alpha sigma3), b = i sigma1); the commutator is exactly
    diagonal and the twist-flow pipeline has closed-form outputs.
    kind 'generic': a = exp(i t sigma3), b = exp(i t sigma1) with t solved
    so the commutator angle is 2 pi alpha.
    """
    if not 0.0 < alpha < 0.5:
        raise ValueError("alpha must lie in (0, 1/2)")
    if kind == "dihedral":
        A = su2.exp_alg(np.pi * alpha * TAU)
        B = su2.exp_alg(0.5 * np.pi * np.array([1.0, 0.0, 0.0]))
        return Representation("one_holed_torus_punctured",
                              {"a": A, "b": B, "p": _commutator_word(A, B)})
    if kind != "generic":
        raise ValueError(f"unknown kind {kind!r}")
    from scipy.optimize import brentq

    def comm_angle(t):
        A = su2.exp_alg(t * TAU)
        B = su2.exp_alg(t * np.array([1.0, 0.0, 0.0]))
        return float(su2.angle(_commutator_word(A, B))) - 2.0 * np.pi * alpha

    t = brentq(comm_angle, 1e-4, np.pi / 2.0, xtol=1e-14)
    A = su2.exp_alg(t * TAU)
    B = su2.exp_alg(t * np.array([1.0, 0.0, 0.0]))
    return Representation("one_holed_torus_punctured",
                          {"a": A, "b": B, "p": _commutator_word(A, B)})


def genus2_rep(alpha: float | None = None,
               handle1: tuple[float, float] = (1.1, 1.1),
               handle2: tuple[float, float] = (0.7, 0.7),
               accidentally_reducible: bool = False) -> Representation:
    """Genus-2 reps for the separating-pinch surface.

    handle i holonomies are exp(i t sigma3) and exp(i s sigma1) (irreducible
    for generic angles).  With accidentally_reducible=True both handles map
    into single (different) maximal tori: each restriction is reducible but
    the joint image is irreducible.  When alpha is given, a puncture defect
    of weight alpha compatible with the surface relation is solved for.
    """
    e3, e1 = TAU, np.array([1.0, 0.0, 0.0])
    if accidentally_reducible:
        t1, s1 = handle1
        t2, s2 = handle2
        mats = {
            "a1": su2.exp_alg(t1 * e3), "b1": su2.exp_alg(s1 * 0.5 * e3),
            "a2": su2.exp_alg(t2 * e1), "b2": su2.exp_alg(s2 * 0.5 * e1),
            "p": su2.identity(),
        }
        if alpha is not None:
            raise ValueError("per-handle abelian reps force trivial puncture weight")
        return Representation("genus2_separating_pinch", mats)
    mats = {
        "a1": su2.exp_alg(handle1[0] * e3), "b1": su2.exp_alg(handle1[1] * e1),
        "a2": su2.exp_alg(handle2[0] * e3), "b2": su2.exp_alg(handle2[1] * e1),
    }
    if alpha is not None:
        W1 = _commutator_word(mats["a1"], mats["b1"])
        W2 = _commutator_word(mats["a2"], mats["b2"])
        mats["p"] = _solve_defect(W1, W2, alpha)
    return Representation("genus2_separating_pinch", mats)


# ---------------------------------------------------------------------------
# twist machinery
# ---------------------------------------------------------------------------


def smoothstep_c2(t) -> np.ndarray:
    """Quintic smoothstep 10t^3 - 15t^4 + 6t^5 clipped to [0, 1]."""
    t = np.clip(np.asarray(t, dtype=float), 0.0, 1.0)
    return t * t * t * (10.0 + t * (-15.0 + 6.0 * t))


def smoothstep_c2_deriv(t) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    inside = (t > 0.0) & (t < 1.0)
    tt = np.where(inside, t, 0.5)
    d = 30.0 * tt * tt * (1.0 - tt) ** 2
    return np.where(inside, d, 0.0)


def cutoff_phi1(r, r_in: float = 1.0 / 6.0, r_out: float = 1.0 / 3.0) -> np.ndarray:
    """Smooth cutoff: 1 on r <= r_in, 0 on r >= r_out, C^2 at the ends."""
    t = (np.asarray(r, dtype=float) - r_in) / (r_out - r_in)
    return 1.0 - smoothstep_c2(t)


def cutoff_phi1_deriv(r, r_in: float = 1.0 / 6.0, r_out: float = 1.0 / 3.0) -> np.ndarray:
    t = (np.asarray(r, dtype=float) - r_in) / (r_out - r_in)
    return -smoothstep_c2_deriv(t) / (r_out - r_in)


@dataclass(frozen=True)
class TwistProfile:
    """Angular weight a(r) of the diagonal twist from weight alpha to beta.

    a(r) = alpha - (alpha - beta) * (phi1(r) + r*phi1'(r)*log r); constant
    beta inside r_in and alpha outside r_out.
    """

    alpha: float
    beta: float
    r_in: float = 1.0 / 6.0
    r_out: float = 1.0 / 3.0

    def __post_init__(self):
        for w, nm in ((self.alpha, "alpha"), (self.beta, "beta")):
            if not 0.0 <= w <= 0.5:
                raise ValueError(f"{nm}={w} outside [0, 1/2]")

    def a(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        phi = cutoff_phi1(r, self.r_in, self.r_out)
        dphi = cutoff_phi1_deriv(r, self.r_in, self.r_out)
        safe = np.where(r > 0, r, 1.0)
        return self.alpha - (self.alpha - self.beta) * (phi + safe * dphi * np.log(safe))

    def a_deriv(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        h = 1e-7
        return (self.a(r + h) - self.a(r - h)) / (2.0 * h)


def twist_profile(alpha: float, beta: float, r_in: float = 1.0 / 6.0,
                  r_out: float = 1.0 / 3.0) -> TwistProfile:
    return TwistProfile(alpha, beta, r_in, r_out)


def _wrap_delta(d: float, period: float) -> float:
    return (d + period / 2.0) % period - period / 2.0


def _puncture_geometry(surface: SurfaceComplex, puncture: dict):
    """Chart displacement helpers (dx, dy periodic-wrapped) around the puncture."""
    ci = puncture["chart"]
    ch = surface.charts[ci]
    cx, cy = puncture["center"]

    def disp(i, j):
        x, y = ch.x_of(i), ch.y_of(j)
        dx = _wrap_delta(x - cx, 1.0) if ch.periodic_x else x - cx
        dy = _wrap_delta(y - cy, 1.0) if ch.periodic_y else y - cy
        return dx, dy

    return ci, ch, disp


def _segment_dtheta(p1, p2) -> float:
    """Exact winding angle of the straight segment p1 -> p2 about the origin."""
    th1 = np.arctan2(p1[1], p1[0])
    th2 = np.arctan2(p2[1], p2[0])
    d = th2 - th1
    return float((d + np.pi) % (2.0 * np.pi) - np.pi)


def _edge_angle_integral(profile: TwistProfile, p1, p2, n_gauss: int = 16) -> float:
    """int_e (a(r) - alpha) dtheta along the straight chart segment p1 -> p2.

    Exact (via the unwrapped segment angle) where a - alpha is constant;
    Gauss quadrature only on segments meeting the annulus, where r is
    bounded away from 0 and the integrand is smooth.
    """
    r1, r2 = np.hypot(*p1), np.hypot(*p2)
    if min(r1, r2) >= profile.r_out:
        return 0.0
    if max(r1, r2) <= profile.r_in:
        return (profile.beta - profile.alpha) * _segment_dtheta(p1, p2)
    x1, y1 = p1
    x2, y2 = p2
    nodes, weights = np.polynomial.legendre.leggauss(n_gauss)
    t = 0.5 * (nodes + 1.0)
    w = 0.5 * weights
    x = x1 + (x2 - x1) * t
    y = y1 + (y2 - y1) * t
    rr = x * x + y * y
    dth = (x * (y2 - y1) - y * (x2 - x1)) / rr
    return float(np.sum(w * (profile.a(np.sqrt(rr)) - profile.alpha) * dth))


def to_standard_form(field: LinkField, surface: SurfaceComplex, puncture: dict,
                     r_fix: float = 0.45, tol: float = 1e-8) -> tuple[LinkField, float]:
    """Gauge the disk r < r_fix around the puncture into the diagonal model.

    For a field flat on the disk, sets every link there to
    exp(i*alpha*dtheta*tau) by a pure vertex gauge transformation (transport
    to a base ring vertex, then the model frame), where alpha is the weight
    of the ring holonomy.  Plaquettes are unchanged.  Returns the gauged
    field and alpha.
    """
    surf = surface
    ci, ch, disp = _puncture_geometry(surf, puncture)
    coords = {}
    for v in range(surf.n_vertices):
        p = _vertex_chart_index(surf, v, ci)
        if p is not None:
            dx, dy = disp(*p)
            r = np.hypot(dx, dy)
            if r < r_fix and r > 1e-12:
                coords[v] = (dx, dy, r, np.arctan2(dy, dx) % (2.0 * np.pi))

    # flatness on the disk (excluding the puncture cell)
    pface = puncture["face"]
    theta_all = su2.angle(field.plaquettes())
    for f in range(surf.n_faces):
        if f == pface or surf.face_chart[f] != ci:
            continue
        i, j = surf.face_cell[f]
        dx, dy = disp(i + 0.5, j + 0.5)
        if np.hypot(dx, dy) < r_fix and theta_all[f] > tol:
            raise StandardFormError(f"field not flat near the puncture (face {f})")

    # base vertex: ring corner of the puncture cell = tail of ring[0]
    ring = puncture["ring"]
    e0, s0 = ring[0]
    v0 = int(surf.edge_tail[e0] if s0 > 0 else surf.edge_head[e0])
    P = holonomy(field, ring)
    alpha = float(su2.angle(P) / (2.0 * np.pi))
    # diagonalize P = Rq exp(2 pi i alpha tau) Rq^-1
    Rq = _conjugator(su2.exp_alg(2.0 * np.pi * alpha * TAU), P)

    # transports from v0 along radial-safe spanning tree within the disk:
    # BFS ordered by |theta cut crossing| avoided: use paths that never
    # cross the cut theta=0 except through v0's sector handled by winding.
    g = su2.identity(surf.n_vertices)
    T = _disk_transports(field, surf, ci, coords, v0)
    th0 = coords[v0][3]
    for v, (qT, wind) in T.items():
        th = coords[v][3] + 2.0 * np.pi * wind
        model = su2.exp_alg(alpha * (th - th0) * TAU)
        g[v] = su2.normalize(su2.mul(model, su2.mul(su2.conj(Rq), su2.conj(qT))))
    out = field.gauge_transform(g)

    # verify the standard form on the annulus (off-diagonal = 0)
    _check_standard(out, surf, puncture, coords, tol)
    return out, alpha


def _disk_transports(field: LinkField, surf: SurfaceComplex, ci: int, coords, v0: int):
    """BFS transports q(v) = transport from v0 to v avoiding the theta=0 cut.

    Returns v -> (q, winding) where winding counts signed cut crossings so
    that theta + 2*pi*winding is continuous along the tree path.
    """
    adj: dict[int, list[tuple[int, int, int]]] = {}
    for e in range(surf.n_edges):
        t, h = int(surf.edge_tail[e]), int(surf.edge_head[e])
        if t in coords and h in coords:
            adj.setdefault(t, []).append((h, e, +1))
            adj.setdefault(h, []).append((t, e, -1))
    out = {v0: (su2.identity(), 0)}
    frontier = [v0]
    while frontier:
        nxt = []
        for v in frontier:
            qv, wv = out[v]
            for (u, e, s) in adj.get(v, ()):
                if u in out:
                    continue
                dth = coords[u][3] - coords[v][3]
                wind = wv
                if dth > np.pi:
                    wind -= 1
                elif dth < -np.pi:
                    wind += 1
                out[u] = (su2.normalize(su2.mul(field.link(e, s), qv)), wind)
                nxt.append(u)
        frontier = nxt
    return out


def _check_standard(field: LinkField, surf: SurfaceComplex, puncture: dict, coords,
                    tol: float):
    ci, ch, disp = _puncture_geometry(surf, puncture)
    bad = 0.0
    for e in range(surf.n_edges):
        t, h = int(surf.edge_tail[e]), int(surf.edge_head[e])
        if t in coords and h in coords and max(coords[t][2], coords[h][2]) < 0.44:
            q = field.q[e]
            bad = max(bad, float(np.hypot(q[1], q[2])))
    if bad > tol:
        raise StandardFormError(f"off-diagonal link entries {bad:g} near the puncture")


def apply_twist(field: LinkField, surface: SurfaceComplex, puncture: dict,
                profile: TwistProfile, tol: float = 1e-8) -> LinkField:
    """Multiply disk links by the diagonal twist transport.

    Requires the field in standard form (diagonal, flat) on the puncture
    disk.  Every edge inside r < r_out + margin gets
    U_e <- U_e * exp(i * tau * int_e (a(r) - alpha) dtheta), which realizes
    the twisted model connection exactly: curvature appears only on annulus
    cells, the ring class moves from alpha to beta, and nothing changes
    outside the cutoff support.
    """
    surf = surface
    ci, ch, disp = _puncture_geometry(surf, puncture)
    out = field.copy()
    r_reach = profile.r_out + 1e-9

    for e in range(surf.n_edges):
        occ = [o for o in surf.edge_occurrences[e] if o[0] == ci]
        if not occ:
            continue
        _, d, i, j = occ[0]
        if d == "x":
            p1, p2 = disp(i, j), disp(i + 1, j)
        else:
            p1, p2 = disp(i, j), disp(i, j + 1)
        if min(np.hypot(*p1), np.hypot(*p2)) > r_reach:
            continue
        if not _edge_points_positive(surf, e, ci, d):
            p1, p2 = p2, p1
        # off-diagonal check on touched links
        q = out.q[e]
        if np.hypot(q[1], q[2]) > tol:
            raise StandardFormError("apply_twist requires diagonal links on the disk")
        I_e = _edge_angle_integral(profile, p1, p2)
        out.q[e] = su2.normalize(su2.mul(su2.exp_alg(I_e * TAU), q))
    return out


def twist_total_curvature(profile: TwistProfile) -> float:
    """int_0^inf a'(r) dr = alpha - beta (per diagonal entry, over 2*pi)."""
    val, _ = quad(lambda r: profile.a_deriv(r), profile.r_in * 0.5, profile.r_out * 1.5,
                  limit=200)
    return float(val)
