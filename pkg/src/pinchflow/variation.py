"""Deformation formulas for constant-coefficient quasiconformal families.

The only Beltrami families used are mu_eps = eps*nu with constant nu, for
which the normalized solution of the Beltrami equation on the plane is
closed-form:

    w_eps(z) = (z + eps*nu*conj(z)) / (1 + eps*nu),   wdot = nu*(conj(z)-z),

with w(0)=0, w(1)=1, w(infinity)=infinity.  All operators are evaluated on
sampled complex matrices over a grid; derivatives are spectral (FFT) on
periodic charts, or supplied analytically by the caller.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .field import cutoff_phi1, cutoff_phi1_deriv, smoothstep_c2, smoothstep_c2_deriv


@dataclass(frozen=True)
class BeltramiFamily:
    """mu_eps = eps * nu * phi0 with constant direction nu, |eps*nu| < 1."""

    nu: complex
    eps_grid: tuple = (1e-2, 5e-3, 2.5e-3)
    phi0_inner: float = 2.0 / 3.0
    phi0_outer: float = 1.0

    def __post_init__(self):
        if max(self.eps_grid) * abs(self.nu) >= 1.0:
            raise ValueError("|eps*nu| must stay below 1 on the grid")

    def phi0(self, r):
        t = (np.asarray(r) - self.phi0_inner) / (self.phi0_outer - self.phi0_inner)
        return 1.0 - smoothstep_c2(t)


@dataclass(frozen=True)
class QCMap:
    """Normalized quasiconformal map for constant nu."""

    nu: complex

    def w(self, z, eps: float):
        m = eps * self.nu
        return (z + m * np.conj(z)) / (1.0 + m)

    def wdot(self, z):
        return self.nu * (np.conj(z) - z)

    def theta(self, z, eps: float):
        return np.angle(self.w(z, eps))


# ---------------------------------------------------------------------------
# spectral derivatives on periodic charts
# ---------------------------------------------------------------------------


def spectral_dz(f: np.ndarray, length: float = 1.0):
    """(d/dz, d/dzbar) of a doubly periodic sampled field via FFT.

    f has shape (n, n, ...) sampled at x_i = i*length/n, y_j likewise, with
    z = x + i y.
    """
    n = f.shape[0]
    k = 2.0 * np.pi * np.fft.fftfreq(n, d=length / n)
    kx = k[:, None]
    ky = k[None, :]
    shape = f.shape[2:]
    F = np.fft.fft2(f, axes=(0, 1))
    kxs = kx.reshape((n, 1) + (1,) * len(shape))
    kys = ky.reshape((1, n) + (1,) * len(shape))
    fx = np.fft.ifft2(1j * kxs * F, axes=(0, 1))
    fy = np.fft.ifft2(1j * kys * F, axes=(0, 1))
    return 0.5 * (fx - 1j * fy), 0.5 * (fx + 1j * fy)


# ---------------------------------------------------------------------------
# deformed dbar operator
# ---------------------------------------------------------------------------


def dbar_mu(f: np.ndarray, mu: np.ndarray, fz: np.ndarray | None = None,
            fzbar: np.ndarray | None = None, length: float = 1.0):
    """(0,1)-operator of the mu-deformed structure on sampled functions.

    Returns the pair of coefficient fields (q, qbar_dz) with
    dbar_mu f = q dzbar + qbar_dz dz, where
        q = (f_zbar - mu f_z) / (1 - |mu|^2),   qbar_dz = conj(mu) * q.
    Derivatives are spectral unless fz/fzbar are supplied.
    """
    mu = np.asarray(mu, dtype=complex)
    if np.any(np.abs(mu) >= 1.0):
        raise ValueError("|mu| must stay below 1")
    if fz is None or fzbar is None:
        fz, fzbar = spectral_dz(np.asarray(f, dtype=complex), length)
    q = (fzbar - mu * fz) / (1.0 - np.abs(mu) ** 2)
    return q, np.conj(mu) * q


def del_mu(f: np.ndarray, mu: np.ndarray, fz=None, fzbar=None, length: float = 1.0):
    """(1,0)-part: p dz + mubar_coeff dzbar with p = (f_z - conj(mu) f_zbar)/(1-|mu|^2)."""
    mu = np.asarray(mu, dtype=complex)
    if fz is None or fzbar is None:
        fz, fzbar = spectral_dz(np.asarray(f, dtype=complex), length)
    p = (fz - np.conj(mu) * fzbar) / (1.0 - np.abs(mu) ** 2)
    return p, mu * p


# ---------------------------------------------------------------------------
# complex gauge action and the first variation
# ---------------------------------------------------------------------------


def _minv(g):
    return np.linalg.inv(g)


def _adj(g):
    return np.conj(np.swapaxes(g, -1, -2))


def complex_gauge_action(A_z: np.ndarray, A_zb: np.ndarray, g: np.ndarray,
                         mu: np.ndarray, length: float = 1.0):
    """Total connection form of g(D_A) under the mu-deformed structure.

    Returns (dz coefficient, dzbar coefficient) of
        g^-1 A^{0,1} g + g* A^{1,0} (g*)^-1 + g^-1 dbar_mu g - (del_mu g*) (g*)^-1,
    with A split into its mu-(1,0)/(0,1) parts first.
    """
    mu = np.asarray(mu, dtype=complex)[..., None, None]
    den = 1.0 - np.abs(mu) ** 2
    # mu-split of the fixed-structure components (a_z, a_zb):
    # (0,1)_mu: q (dzbar + conj(mu) dz), q = (a_zb - mu a_z)/den
    # (1,0)_mu: p (dz + mu dzbar),       p = (a_z - conj(mu) a_zb)/den
    q = (A_zb - mu * A_z) / den
    p = (A_z - np.conj(mu) * A_zb) / den
    gi = _minv(g)
    gs = _adj(g)
    gsi = _minv(gs)
    A01_g = gi @ q @ g          # coefficient of (dzbar + conj(mu) dz)
    A10_g = gs @ p @ gsi        # coefficient of (dz + mu dzbar)

    gz, gzb = spectral_dz(g, length)
    gsz, gszb = spectral_dz(gs, length)
    qg = (gzb - mu * gz) / den
    pg = (gsz - np.conj(mu) * gszb) / den
    dbar_term = gi @ qg          # coefficient of (dzbar + conj(mu) dz)
    del_term = pg @ gsi          # coefficient of (dz + mu dzbar)

    coeff_dzb = A01_g + dbar_term + mu * (A10_g - del_term)
    coeff_dz = A10_g - del_term + np.conj(mu) * (A01_g + dbar_term)
    return coeff_dz, coeff_dzb


def first_variation(A_z: np.ndarray, A_zb: np.ndarray, g: np.ndarray,
                    gdot: np.ndarray, Adot_zb: np.ndarray, nu: complex,
                    length: float = 1.0):
    """gamma_dot^{0,1} (dzbar coefficient, fixed structure):

        dbar_{g(A)}(g^-1 gdot)
        - nu [ (del_A g*) (g*)^-1 + (g*)^-1 del_A g* ]
        + g^-1 Adot^{0,1} g.

    Valid for hermitian g (the slice of the complex gauge group modulo
    unitary gauge); gdot is unrestricted.
    """
    gi = _minv(g)
    gs = _adj(g)
    gsi = _minv(gs)
    s = gi @ gdot
    sz, szb = spectral_dz(s, length)
    # g(A)^{0,1} at mu = 0:
    B_zb = gi @ A_zb @ g + gi @ spectral_dz(g, length)[1]
    dbar_gA = szb + B_zb @ s - s @ B_zb
    gsz, gszb = spectral_dz(gs, length)
    delA_gs = gsz + A_z @ gs - gs @ A_z
    middle = delA_gs @ gsi + gsi @ delA_gs
    return dbar_gA - nu * middle + gi @ Adot_zb @ g


def first_variation_fd(A_z, A_zb, g, gdot, Adot_z, Adot_zb, nu: complex,
                       eps: float, length: float = 1.0):
    """Centered difference of the dzbar coefficient of gamma_eps = g_eps(A_eps)."""
    out = []
    for s in (+1.0, -1.0):
        e = s * eps
        mu = np.full(A_z.shape[:2], e * nu, dtype=complex)
        _, czb = complex_gauge_action(A_z + e * Adot_z, A_zb + e * Adot_zb,
                                      g + e * gdot, mu, length)
        out.append(czb)
    return (out[0] - out[1]) / (2.0 * eps)


# ---------------------------------------------------------------------------
# frame twisting and the twisted variation
# ---------------------------------------------------------------------------


def frame_twist_derivative(alpha: float, z: complex, wdot: complex) -> float:
    """udot with i*udot = (alpha/2)(wdot/z - conj(wdot/z)); real by construction."""
    if z == 0:
        raise ValueError("frame twist undefined at z = 0")
    iu = 0.5 * alpha * (wdot / z - np.conj(wdot / z))
    return float(iu.imag)


def _phi2(r, r_in: float = 1.0 / 3.0, r_out: float = 2.0 / 3.0):
    t = (np.asarray(r) - r_in) / (r_out - r_in)
    return 1.0 - smoothstep_c2(t)


def _phi2_deriv(r, r_in: float = 1.0 / 3.0, r_out: float = 2.0 / 3.0):
    t = (np.asarray(r) - r_in) / (r_out - r_in)
    return -smoothstep_c2_deriv(t) / (r_out - r_in)


def twisted_gamma_dot(alpha: float, beta: float, nu: complex, z) -> np.ndarray:
    """dzbar coefficient of the twisted-family variation, e^+ entry, closed form.

    gamma_dot = dzbar[ phi2 * h ] - 2 (alpha-beta) nu d_z(phi1 log|z|),
    with h = ((alpha-beta)/2) * ((wdot/z - cc) + phi1 (wdot/z + cc)) and
    wdot = nu (zbar - z).  All radial cutoffs differentiate analytically,
    so the support statement (annulus 1/6 <= |z| <= 2/3) is exact.
    """
    z = np.asarray(z, dtype=complex)
    r = np.abs(z)
    out = np.zeros_like(z)
    ok = r > 1e-12
    zz = z[ok]
    rr = r[ok]
    ab = alpha - beta

    w_over_z = nu * (np.conj(zz) - zz) / zz      # nu (zbar/z - 1)
    cc = np.conj(w_over_z)
    phi1 = cutoff_phi1(rr)
    dphi1 = cutoff_phi1_deriv(rr)
    phi2 = _phi2(rr)
    dphi2 = _phi2_deriv(rr)

    # dzbar of radial F(r): F'(r) * z/(2r)
    def dzbar_radial(Fp):
        return Fp * zz / (2.0 * rr)

    # dzbar(w/z) = nu/z ;  dzbar(conj(w/z)) = conj(dz(w/z)) = conj(-nu zbar/z^2 - ... )
    d_wz = nu / zz
    dz_wz = nu * (-np.conj(zz) / zz**2 - 0.0)    # d/dz of nu(zbar/z - 1) = -nu zbar/z^2
    d_cc = np.conj(dz_wz)

    h = 0.5 * ab * ((w_over_z - cc) + phi1 * (w_over_z + cc))
    dh = 0.5 * ab * ((d_wz - d_cc)
                     + dzbar_radial(dphi1) * (w_over_z + cc)
                     + phi1 * (d_wz + d_cc))
    term1 = dzbar_radial(dphi2) * h + phi2 * dh
    # d_z(phi1 log|z|) = phi1'(r) zbar/(2r) log r + phi1 * 1/(2z)
    dz_philog = dphi1 * np.conj(zz) / (2.0 * rr) * np.log(rr) + phi1 / (2.0 * zz)
    term2 = -2.0 * ab * nu * dz_philog
    out[ok] = term1 + term2
    return out
