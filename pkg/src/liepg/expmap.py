"""Matrix exponential machinery: exp, its Frechet derivative and adjoint, the
SO(3) logarithm, closed-form group exponentials, and smoothness-bound formulas."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

__all__ = [
    "mat_exp",
    "mat_exp_frechet",
    "frechet_adjoint",
    "so3_exp",
    "se3_exp",
    "so3_log",
    "rotation_angle",
    "SmoothnessParams",
    "theoretical_lipschitz",
]


def mat_exp(A):
    """Matrix exponential (scaling-and-squaring with a Pade kernel).

    For skew-symmetric input the result is orthogonal with determinant +1.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix exponential requires finite entries")
    return scipy.linalg.expm(A)


def mat_exp_frechet(A, H):
    """exp(A) together with its Frechet derivative D_A[H].

    Uses the block identity: the exponential of [[A, H], [0, A]] carries
    D_A[H] in its top-right block, so the derivative inherits mat_exp's
    accuracy with no quadrature.
    """
    A = np.asarray(A, dtype=float)
    H = np.asarray(H, dtype=float)
    if A.shape != H.shape:
        raise ValueError(f"A and H must have equal shapes, got {A.shape} vs {H.shape}")
    n = A.shape[0]
    M = np.zeros((2 * n, 2 * n))
    M[:n, :n] = A
    M[n:, n:] = A
    M[:n, n:] = H
    E = mat_exp(M)
    return E[:n, :n], E[:n, n:]


def frechet_adjoint(A, W):
    """Adjoint D_A*[W] of the Frechet derivative: <D_A[H], W> = <H, D_A*[W]>.

    From the integral representation, D_A*[W] = D_{A^T}[W].
    """
    A = np.asarray(A, dtype=float)
    W = np.asarray(W, dtype=float)
    if A.shape != W.shape:
        raise ValueError(f"A and W must have equal shapes, got {A.shape} vs {W.shape}")
    return mat_exp_frechet(A.T, W)[1]


def _skew_from_vec(w):
    w = np.asarray(w, dtype=float)
    K = np.zeros(w.shape[:-1] + (3, 3))
    K[..., 0, 1] = -w[..., 2]
    K[..., 1, 0] = w[..., 2]
    K[..., 0, 2] = w[..., 1]
    K[..., 2, 0] = -w[..., 1]
    K[..., 1, 2] = -w[..., 0]
    K[..., 2, 1] = w[..., 0]
    return K


def _rodrigues_coeffs(theta):
    """(sin t / t, (1 - cos t) / t^2) with series branch below 1e-4."""
    theta = np.asarray(theta, dtype=float)
    small = theta < 1e-4
    t2 = theta * theta
    with np.errstate(divide="ignore", invalid="ignore"):
        a = np.where(small, 1.0 - t2 / 6.0 + t2 * t2 / 120.0, np.sin(theta) / theta)
        b = np.where(small, 0.5 - t2 / 24.0 + t2 * t2 / 720.0,
                     (1.0 - np.cos(theta)) / np.where(small, 1.0, t2))
    return a, b


def so3_exp(w):
    """Rodrigues formula; accepts rotation vectors of shape (..., 3)."""
    w = np.asarray(w, dtype=float)
    theta = np.linalg.norm(w, axis=-1)
    K = _skew_from_vec(w)
    a, b = _rodrigues_coeffs(theta)
    eye = np.broadcast_to(np.eye(3), K.shape)
    return eye + a[..., None, None] * K + b[..., None, None] * (K @ K)


def se3_exp(w, v):
    """Closed-form exponential of [[skew(w), v], [0, 0]] as a 4x4 transform."""
    w = np.asarray(w, dtype=float)
    v = np.asarray(v, dtype=float)
    theta = float(np.linalg.norm(w))
    K = _skew_from_vec(w)
    R = so3_exp(w)
    if theta < 1e-4:
        V = np.eye(3) + 0.5 * K + (K @ K) / 6.0
    else:
        t2 = theta * theta
        V = (np.eye(3)
             + ((1.0 - np.cos(theta)) / t2) * K
             + ((theta - np.sin(theta)) / (t2 * theta)) * (K @ K))
    T = np.eye(4)
    T[:3, :3] = R
    T[:3, 3] = V @ v
    return T


def rotation_angle(R):
    """Geodesic rotation angle(s) in [0, pi] from trace; accepts (..., 3, 3)."""
    R = np.asarray(R, dtype=float)
    tr = np.trace(R, axis1=-2, axis2=-1)
    return np.arccos(np.clip((tr - 1.0) / 2.0, -1.0, 1.0))


def so3_log(R):
    """Principal logarithm of a rotation matrix, returned as a 3x3 skew matrix.

    Branches: Rodrigues inverse generally, a series for angles below 1e-4,
    and an eigen-axis branch near pi where the skew part degenerates.

    Raises
    ------
    ValueError
        If R is not orthogonal within 1e-8 or has non-positive determinant.
    """
    R = np.asarray(R, dtype=float)
    if R.shape != (3, 3):
        raise ValueError(f"expected a 3x3 matrix, got shape {R.shape}")
    if np.linalg.norm(R.T @ R - np.eye(3)) > 1e-8:
        raise ValueError("input is not orthogonal within 1e-8")
    if np.linalg.det(R) <= 0:
        raise ValueError("input rotation must have determinant +1")
    theta = float(rotation_angle(R))
    S = 0.5 * (R - R.T)
    if theta < 1e-4:
        # log R = S * (1 + theta^2/6 + 7 theta^4/360 + ...)
        return S * (1.0 + theta**2 / 6.0 + 7.0 * theta**4 / 360.0)
    if np.pi - theta < 1e-4:
        # Axis from the symmetric part: R ~ 2 a a^T - I at angle pi.
        B = 0.5 * (R + np.eye(3))
        k = int(np.argmax(np.diag(B)))
        axis = B[:, k] / np.sqrt(max(B[k, k], 1e-16))
        axis = axis / np.linalg.norm(axis)
        # Fix the sign ambiguity using the skew part where possible.
        s_vec = np.array([S[2, 1], S[0, 2], S[1, 0]])
        if np.dot(s_vec, axis) < 0:
            axis = -axis
        return _skew_from_vec(theta * axis)
    return S * (theta / np.sin(theta))


@dataclass(frozen=True)
class SmoothnessParams:
    """Inputs to the closed-form gradient-smoothness bound.

    C_d is a documented configuration constant (never estimated here).
    """

    R_max: float
    B_Phi: float
    B_a: float
    C_d: float
    gamma: float
    sigma: float
    R0: float
    n: int
    compact: bool

    def __post_init__(self):
        for name in ("R_max", "B_Phi", "B_a", "C_d", "sigma"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be strictly positive")
        if not 0.0 <= self.gamma < 1.0:
            raise ValueError("gamma must lie in [0, 1)")
        if self.R0 < 0:
            raise ValueError("R0 must be nonnegative")
        if self.n < 1:
            raise ValueError("n must be a positive integer")


def theoretical_lipschitz(p):
    """Closed-form gradient Lipschitz bound for the Gaussian policy objective.

    prefactor * (2 + sqrt(n)) for compact algebras (radius-independent; the
    additive 2 is adopted verbatim from the source constant), and
    prefactor * n * e^{2 R0} otherwise, with
    prefactor = 4 R_max B_Phi B_a C_d / ((1 - gamma)^3 sigma^2).
    """
    pref = 4.0 * p.R_max * p.B_Phi * p.B_a * p.C_d / ((1.0 - p.gamma) ** 3 * p.sigma**2)
    if p.compact:
        return pref * (2.0 + np.sqrt(p.n))
    return pref * p.n * np.exp(2.0 * p.R0)
