"""Twist maps as a pipeline (twist -> flow -> extract), leaves, degeneration.

pi_ab realizes a representation as a flat link field in standard form at
the puncture, applies the diagonal twist from weight alpha to beta, flows
back to flat, and extracts the new representation.  The nodal (ell = 0)
variant flows only the component containing the puncture, with the node
rings frozen; the reported representation uses the stored gluing frames
across each pinching curve, so the transverse holonomy of the nodal result
is trivial by construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np

from . import su2
from .field import (LinkField, Representation, apply_twist,
                    accidental_reducibility, conjugacy_invariants,
                    connection_from_representation, extract_representation,
                    holonomy, to_standard_form, trace_distance, twist_profile)
from .flow import FlowConfig, FlowDiagnostics, flow_to_flat
from .geom import MetricGrid, SurfaceComplex, metric_for
from .spectral import lambda1


class AccidentalReducibilityError(ValueError):
    """Input representation lies in the excluded accidentally reducible set."""


@dataclass
class FoliationPoint:
    rep: Representation
    alpha: float
    ell: float
    kappa: float

    def __post_init__(self):
        w = self.rep.puncture_weight()
        if abs(w - self.alpha) > 1e-8:
            raise ValueError(f"puncture class {w:.6f} does not match alpha={self.alpha}")


@dataclass
class LeafTrace:
    betas: np.ndarray
    invariants: np.ndarray       # (n_beta, n_inv)
    step_distances: np.ndarray   # consecutive trace distances
    lipschitz: float             # fitted L with dist <= L * dbeta
    second_differences: np.ndarray


@dataclass
class PiResult:
    rep: Representation
    diagnostics: FlowDiagnostics
    field: LinkField
    gamma_arc_norms: dict[str, float] = dc_field(default_factory=dict)


def _prepared_field(point: FoliationPoint, surface: SurfaceComplex) -> tuple[LinkField, float]:
    lf = connection_from_representation(point.rep, surface)
    sf, alpha = to_standard_form(lf, surface, surface.punctures[0])
    return sf, alpha


def _gamma_norms(fieldv: LinkField, surface: SurfaceComplex) -> dict[str, float]:
    out = {}
    for name, path in surface.arcs.items():
        H = su2.to_matrix(holonomy(fieldv, path))
        out[name] = float(np.linalg.norm(H - np.eye(2)))
    return out


def pi_ab(point: FoliationPoint, beta: float, surface: SurfaceComplex,
          metric: MetricGrid | None = None, config: FlowConfig | None = None,
          ) -> PiResult:
    """The twist map: changes the puncture weight alpha -> beta by the
    singular diagonal twist, then flows back to flat.

    For beta = alpha this is the identity (no twist, the field is already
    flat so the flow returns immediately).
    """
    if not (0.0 < beta < 0.5) or not (0.0 < point.alpha < 0.5):
        raise ValueError("weights must lie in (0, 1/2)")
    m = metric if metric is not None else metric_for(surface, point.ell, point.kappa)
    sf, alpha = _prepared_field(point, surface)
    tw = apply_twist(sf, surface, surface.punctures[0], twist_profile(alpha, beta))
    fin, diag = flow_to_flat(tw, m, config)
    if not diag.converged:
        raise RuntimeError(
            f"flow timed out at t={diag.final_time:.3f} with sup|*F|={diag.sup_f[-1]:.3e}")
    rep = extract_representation(fin)
    return PiResult(rep=rep, diagnostics=diag, field=fin,
                    gamma_arc_norms=_gamma_norms(fin, surface))


def composition_check(point: FoliationPoint, alpha: float, beta: float, gamma: float,
                      surface: SurfaceComplex, metric: MetricGrid | None = None,
                      config: FlowConfig | None = None) -> dict:
    """Compare pi_{alpha,gamma} with pi_{beta,gamma} o pi_{alpha,beta}."""
    if not (gamma < beta < alpha):
        raise ValueError("need gamma < beta < alpha")
    m = metric if metric is not None else metric_for(surface, point.ell, point.kappa)
    direct = pi_ab(point, gamma, surface, m, config)
    first = pi_ab(point, beta, surface, m, config)
    mid = FoliationPoint(first.rep, beta, point.ell, point.kappa)
    second = pi_ab(mid, gamma, surface, m, config)
    names = [n for n in point.rep.loop_names() if n != "p"] + ["p"]
    d = trace_distance(direct.rep, second.rep, loop_names=names)
    return {
        "discrepancy": d,
        "direct": direct.rep,
        "composed": second.rep,
        "loop_names": names,
    }


def leaf_sweep(point: FoliationPoint, betas, surface: SurfaceComplex,
               metric: MetricGrid | None = None, config: FlowConfig | None = None,
               ) -> LeafTrace:
    """Trace invariants of pi_ab(point, beta) along a beta grid."""
    betas = np.asarray(sorted(betas), dtype=float)
    if np.any(np.diff(betas) > 0.05 + 1e-12):
        raise ValueError("beta grid step must be at most 0.05")
    m = metric if metric is not None else metric_for(surface, point.ell, point.kappa)
    names = [n for n in point.rep.loop_names() if n != "p"] + ["p"]
    rows = []
    for b in betas:
        if abs(b - point.alpha) < 1e-12:
            rows.append(conjugacy_invariants(point.rep, names))
        else:
            rows.append(conjugacy_invariants(pi_ab(point, b, surface, m, config).rep, names))
    inv = np.array(rows)
    steps = np.abs(np.diff(inv, axis=0)).max(axis=1)
    dbeta = np.diff(betas)
    lip = float(np.max(steps / dbeta)) if len(steps) else 0.0
    second = np.abs(np.diff(inv, n=2, axis=0)).max(axis=1) if len(betas) > 2 else np.array([])
    return LeafTrace(betas=betas, invariants=inv, step_distances=steps,
                     lipschitz=lip, second_differences=second)


# ---------------------------------------------------------------------------
# nodal flow and degeneration experiments
# ---------------------------------------------------------------------------


def nodal_precheck(point: FoliationPoint, surface: SurfaceComplex,
                   lambda_min: float = 1e-4) -> float:
    """Stability proxy for epsilon([A]): lambda_1 of the puncture component
    at ell = 0 must exceed lambda_min (and the representation must not be
    accidentally reducible)."""
    _, acc = accidental_reducibility(point.rep, surface)
    if acc:
        raise AccidentalReducibilityError(
            "representation is accidentally reducible; nodal flow undefined on R^Phi")
    lf = connection_from_representation(point.rep, surface)
    m0 = metric_for(surface, 0.0, point.kappa)
    lam = _component_lambda1(lf, m0, surface)
    if lam <= lambda_min:
        raise AccidentalReducibilityError(
            f"puncture-component spectral gap {lam:.2e} below {lambda_min:g}")
    return lam


def _component_lambda1(lf: LinkField, metric: MetricGrid, surface: SurfaceComplex) -> float:
    """lambda_1 of adE0 restricted to the component containing the puncture."""
    from .spectral import assemble_laplacian, eigensolve

    lap = assemble_laplacian(lf, metric, bundle="adE0")
    # component of the puncture cell: locate via a ring vertex
    ring = surface.punctures[0]["ring"]
    v0 = int(surface.edge_tail[ring[0][0]])
    dof = np.where(lap.dof_vertices == v0)[0]
    comp = lap.components[dof[0]]
    spec = eigensolve(lap, k=3)
    sel = [i for i in range(len(spec.eigenvalues))
           if lap.components[np.argmax(np.abs(spec.eigensections[:, i]))] == comp]
    vals = spec.eigenvalues[sel] if sel else spec.eigenvalues
    return float(vals[0])


def nodal_pi_ab(point: FoliationPoint, beta: float, surface: SurfaceComplex,
                config: FlowConfig | None = None, lambda_min: float = 1e-4,
                ) -> PiResult:
    """pi_ab at ell = 0: flows only the puncture component, node rings frozen.

    The returned representation is the lift assembled with the stored
    gluing frames: loop tails crossing a pinching cylinder use the
    pre-flow standard links, so the transverse holonomy of the nodal
    result is the identity and the holonomies around each pinching curve
    are exactly preserved.
    """
    nodal_precheck(point, surface, lambda_min)
    m0 = metric_for(surface, 0.0, point.kappa)
    sf, alpha = _prepared_field(point, surface)
    stored = sf.copy()
    tw = apply_twist(sf, surface, surface.punctures[0], twist_profile(alpha, beta))
    fin, diag = flow_to_flat(tw, m0, config)
    if not diag.converged:
        raise RuntimeError("nodal component flow timed out")
    lifted = _lift_with_stored_frames(fin, stored, surface)
    rep = extract_representation(lifted)
    return PiResult(rep=rep, diagnostics=diag, field=fin,
                    gamma_arc_norms=_gamma_norms(lifted, surface))


def _lift_with_stored_frames(fin: LinkField, stored: LinkField,
                             surface: SurfaceComplex) -> LinkField:
    """Replace cylinder-chart links by their stored standard-frame values.

    At ell = 0 the flow leaves everything off the puncture component fixed
    and the node rings frozen; resetting the cylinder interior to the
    stored frame implements the canonical lift (original gluing data).
    """
    out = fin.copy()
    cyl_charts = {c["chart"] for c in surface.pinching_curves}
    for e in range(surface.n_edges):
        if any(o[0] in cyl_charts for o in surface.edge_occurrences[e]):
            out.q[e] = stored.q[e]
    return out


@dataclass
class DegenerationReport:
    ells: np.ndarray
    xi_distance: np.ndarray        # invariant distance to the nodal result
    gamma_max: np.ndarray          # max transverse |hol - I| per ell
    pinch_trace_drift: np.ndarray  # |tr c_out - tr c_in| per ell
    nodal_invariants: np.ndarray
    invariants: np.ndarray         # (n_ell, n_inv)
    loop_names: list[str]
    betas: tuple


def degeneration_experiment(point: FoliationPoint, beta: float,
                            ells, surface: SurfaceComplex,
                            config: FlowConfig | None = None,
                            xi_loops: list[str] | None = None,
                            lambda_min: float = 1e-4) -> DegenerationReport:
    """Run pi_ab across a decreasing ell sequence and against the nodal limit.

    Per ell: conjugation invariants on the off-cylinder loop set and the
    max transverse arc deviation |hol_Gamma - I| in the stored frame.
    Accidentally reducible inputs are refused (the excluded set R^Phi).
    """
    ells = np.asarray(sorted(ells, reverse=True), dtype=float)
    if np.any(ells <= 0.0):
        raise ValueError("ell sequence must be positive; the nodal run is implicit")
    nodal = nodal_pi_ab(point, beta, surface, config, lambda_min)
    names = xi_loops if xi_loops is not None else ["a1", "b1", "a2", "b2"]
    ref = conjugacy_invariants(nodal.rep, names)
    c_in = float(su2.trace(point.rep.matrices["c"])) if "c" in point.rep.matrices else None
    rows, dists, gammas, drifts = [], [], [], []
    for ell in ells:
        m = metric_for(surface, float(ell), point.kappa)
        res = pi_ab(FoliationPoint(point.rep, point.alpha, float(ell), point.kappa),
                    beta, surface, m, config)
        inv = conjugacy_invariants(res.rep, names)
        rows.append(inv)
        dists.append(float(np.abs(inv - ref).max()))
        gammas.append(max(res.gamma_arc_norms.values()))
        if c_in is not None:
            drifts.append(abs(float(su2.trace(res.rep.matrices["c"])) - c_in))
        else:
            drifts.append(np.nan)
    return DegenerationReport(
        ells=ells, xi_distance=np.array(dists), gamma_max=np.array(gammas),
        pinch_trace_drift=np.array(drifts), nodal_invariants=ref,
        invariants=np.array(rows), loop_names=names, betas=(point.alpha, beta),
    )


# ---------------------------------------------------------------------------
# dihedral closed-form oracle
# ---------------------------------------------------------------------------


def dihedral_targets(beta: float) -> dict[str, float]:
    """Exact output traces of pi_ab on the dihedral punctured-torus rep.

    The flow preserves the binary-dihedral locus (holonomies in the
    normalizer of the diagonal torus), which is rigid: the flat limit has
    a ~ exp(i pi beta sigma3) up to conjugation, b a Weyl element, so
    tr a = 2 cos(pi beta), tr p = 2 cos(2 pi beta), tr b = tr(ab) = 0.
    """
    return {
        "a": 2.0 * np.cos(np.pi * beta),
        "b": 0.0,
        "p": 2.0 * np.cos(2.0 * np.pi * beta),
        "ab": 0.0,
    }
