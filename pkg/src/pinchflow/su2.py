"""SU(2) group and su(2) algebra kernels on unit quaternions.

A quaternion q = (w, x, y, z) with |q| = 1 represents the SU(2) matrix

    U = w*I + i*(x*sigma1 + y*sigma2 + z*sigma3)
      = [[w + i*z,  y + i*x],
         [-y + i*x, w - i*z]]

Algebra elements are real 3-vectors v representing the traceless
anti-hermitian matrix X = i*(v . sigma); note |X|_F^2 = 2*|v|^2.

All functions broadcast over leading axes; the quaternion/vector axis is
last.  Storage is float64 throughout (drift-free group constraint by
renormalization after every product).
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "BranchCutError",
    "identity",
    "normalize",
    "mul",
    "conj",
    "trace",
    "angle",
    "to_matrix",
    "from_matrix",
    "exp_alg",
    "log_alg",
    "log_norm_fro",
    "rotation",
    "random_su2",
    "random_alg",
]

_SIGMA = np.array(
    [
        [[0, 1], [1, 0]],
        [[0, -1j], [1j, 0]],
        [[1, 0], [0, -1]],
    ],
    dtype=complex,
)


class BranchCutError(ValueError):
    """Principal log requested for a group element with an eigenvalue at -1."""


def identity(shape=()) -> np.ndarray:
    if isinstance(shape, int):
        shape = (shape,)
    q = np.zeros((*shape, 4))
    q[..., 0] = 1.0
    return q


def normalize(q: np.ndarray) -> np.ndarray:
    n = np.sqrt(np.sum(q * q, axis=-1, keepdims=True))
    return q / n


def mul(q1: np.ndarray, q2: np.ndarray) -> np.ndarray:
    """Group product q1*q2 (matrix order: q2 acts first on a column vector)."""
    w1, v1 = q1[..., :1], q1[..., 1:]
    w2, v2 = q2[..., :1], q2[..., 1:]
    w = w1 * w2 - np.sum(v1 * v2, axis=-1, keepdims=True)
    # U = w + i v.sigma convention flips the sign of the cross term.
    v = w1 * v2 + w2 * v1 - np.cross(v1, v2)
    return np.concatenate([w, v], axis=-1)


def conj(q: np.ndarray) -> np.ndarray:
    """Hermitian conjugate = inverse."""
    out = q.copy()
    out[..., 1:] *= -1.0
    return out


def trace(q: np.ndarray) -> np.ndarray:
    return 2.0 * q[..., 0]


def angle(q: np.ndarray) -> np.ndarray:
    """Rotation angle theta in [0, pi] with tr U = 2 cos(theta)."""
    vn = np.linalg.norm(q[..., 1:], axis=-1)
    return np.arctan2(vn, q[..., 0])


def to_matrix(q: np.ndarray) -> np.ndarray:
    w, x, y, z = q[..., 0], q[..., 1], q[..., 2], q[..., 3]
    U = np.zeros(q.shape[:-1] + (2, 2), dtype=complex)
    U[..., 0, 0] = w + 1j * z
    U[..., 0, 1] = y + 1j * x
    U[..., 1, 0] = -y + 1j * x
    U[..., 1, 1] = w - 1j * z
    return U


def from_matrix(U: np.ndarray) -> np.ndarray:
    q = np.zeros(U.shape[:-2] + (4,))
    q[..., 0] = 0.5 * (U[..., 0, 0].real + U[..., 1, 1].real)
    q[..., 1] = 0.5 * (U[..., 0, 1].imag + U[..., 1, 0].imag)
    q[..., 2] = 0.5 * (U[..., 0, 1].real - U[..., 1, 0].real)
    q[..., 3] = 0.5 * (U[..., 0, 0].imag - U[..., 1, 1].imag)
    return normalize(q)


def exp_alg(v: np.ndarray) -> np.ndarray:
    """exp(i v.sigma) as a quaternion."""
    th = np.linalg.norm(v, axis=-1, keepdims=True)
    w = np.cos(th)
    # sin(th)/th with series for small th
    small = th < 1e-8
    s = np.where(small, 1.0 - th * th / 6.0, np.sin(np.where(small, 1.0, th)) / np.where(small, 1.0, th))
    return np.concatenate([w, s * v], axis=-1)


def log_alg(q: np.ndarray, branch_tol: float = 1e-7) -> np.ndarray:
    """Principal log: the 3-vector v with exp(i v.sigma) = U, |v| < pi.

    Raises BranchCutError when an eigenvalue of U sits within branch_tol of
    -1 (trace near -2), where the principal branch is ill-defined.
    """
    vn = np.linalg.norm(q[..., 1:], axis=-1)
    th = np.arctan2(vn, q[..., 0])
    if np.any(th > np.pi - branch_tol):
        raise BranchCutError("group element within %g of the log branch cut" % branch_tol)
    small = vn < 1e-12
    scale = np.where(small, 1.0, th / np.where(small, 1.0, vn))
    return scale[..., None] * q[..., 1:]


def log_norm_fro(q: np.ndarray) -> np.ndarray:
    """Frobenius norm of log U, = sqrt(2)*theta.  Never raises (theta <= pi)."""
    return np.sqrt(2.0) * angle(q)


def rotation(q: np.ndarray) -> np.ndarray:
    """Adjoint action on the algebra: U (i a.sigma) U^-1 = i (R a).sigma.

    For q = (cos t, sin t n) this is the rotation by -2t about n.
    """
    w, x, y, z = q[..., 0], q[..., 1], q[..., 2], q[..., 3]
    R = np.empty(q.shape[:-1] + (3, 3))
    R[..., 0, 0] = w * w + x * x - y * y - z * z
    R[..., 0, 1] = 2 * (x * y + w * z)
    R[..., 0, 2] = 2 * (x * z - w * y)
    R[..., 1, 0] = 2 * (x * y - w * z)
    R[..., 1, 1] = w * w - x * x + y * y - z * z
    R[..., 1, 2] = 2 * (y * z + w * x)
    R[..., 2, 0] = 2 * (x * z + w * y)
    R[..., 2, 1] = 2 * (y * z - w * x)
    R[..., 2, 2] = w * w - x * x - y * y + z * z
    return R


def random_su2(rng: np.random.Generator, shape=()) -> np.ndarray:
    """Haar-uniform SU(2) elements (normalized 4-Gaussians)."""
    if isinstance(shape, int):
        shape = (shape,)
    return normalize(rng.standard_normal((*shape, 4)))


def random_alg(rng: np.random.Generator, shape=(), scale: float = 1.0) -> np.ndarray:
    if isinstance(shape, int):
        shape = (shape,)
    return scale * rng.standard_normal((*shape, 3))
