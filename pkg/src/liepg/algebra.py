"""Matrix Lie algebras: orthonormal bases, closed-form projectors, coordinate isometry.

Every supported algebra is a linear subspace of n x n real matrices carrying the
Frobenius inner product <A, B> = tr(A^T B).  A descriptor fixes an orthonormal
basis so that the coordinate map iota(x) = sum_k x_k E_k is a linear isometry
between R^{d_g} and the algebra.
"""

from __future__ import annotations

from enum import Enum

import numpy as np

__all__ = [
    "AlgebraKind",
    "AlgebraDescriptor",
    "AlgebraElement",
    "make_descriptor",
    "project",
    "coords_of",
    "matrix_of",
    "hyperbolic_witness",
    "so3_coords_to_rotvec",
    "so3_rotvec_to_coords",
]

MEMBERSHIP_RTOL = 1e-10


class AlgebraKind(str, Enum):
    SO_N = "so_n"
    SL_N = "sl_n"
    SE_3 = "se_3"
    GL_N = "gl_n"
    DIAG_N = "diag_n"
    SO3_PRODUCT = "so3_product"


#: kinds whose exponentials are orthogonal (bounded operator norm)
COMPACT_KINDS = frozenset({AlgebraKind.SO_N, AlgebraKind.SO3_PRODUCT})

_SQRT2 = float(np.sqrt(2.0))


class AlgebraDescriptor:
    """Immutable description of one matrix Lie algebra.

    Attributes
    ----------
    kind : AlgebraKind
    n : int
        Ambient matrix size (3J for SO3_PRODUCT, 4 for SE_3).
    d_g : int
        Intrinsic dimension = number of basis elements.
    basis : ndarray, shape (d_g, n, n)
        Frobenius-orthonormal basis.  Ordering convention: row-major over
        index pairs; for SL_N off-diagonal elements precede the n-1 traceless
        diagonal generators; for SE_3 the three rotation generators precede
        the three translations; for SO3_PRODUCT coordinates are contiguous
        per joint.
    joints : int or None
        Number of 3x3 blocks for SO3_PRODUCT, else None.
    """

    __slots__ = ("kind", "n", "d_g", "basis", "joints")

    def __init__(self, kind, n, basis, joints=None):
        self.kind = kind
        self.n = int(n)
        self.basis = np.asarray(basis, dtype=float)
        self.basis.setflags(write=False)
        self.d_g = self.basis.shape[0]
        self.joints = joints

    @property
    def compact(self):
        return self.kind in COMPACT_KINDS

    def __repr__(self):
        extra = f", J={self.joints}" if self.joints is not None else ""
        return f"AlgebraDescriptor({self.kind.value}, n={self.n}, d_g={self.d_g}{extra})"


class AlgebraElement:
    """An algebra element held as basis coordinates; ambient matrix built lazily."""

    __slots__ = ("descriptor", "coords", "_ambient")

    def __init__(self, descriptor, coords, ambient=None):
        coords = np.asarray(coords, dtype=float)
        if coords.shape != (descriptor.d_g,):
            raise ValueError(
                f"coords must have length d_g={descriptor.d_g}, got shape {coords.shape}"
            )
        self.descriptor = descriptor
        self.coords = coords
        self._ambient = ambient

    @property
    def ambient(self):
        if self._ambient is None:
            self._ambient = matrix_of(self.descriptor, self.coords)
        return self._ambient

    def norm(self):
        return float(np.linalg.norm(self.coords))

    def __repr__(self):
        return f"AlgebraElement({self.descriptor!r}, |coords|={self.norm():.4g})"


def _so_basis(n):
    """Skew-symmetric basis, unit Frobenius norm, row-major pairs (i<j)."""
    out = []
    for i in range(n):
        for j in range(i + 1, n):
            E = np.zeros((n, n))
            E[i, j] = 1.0 / _SQRT2
            E[j, i] = -1.0 / _SQRT2
            out.append(E)
    return np.array(out)


def _diag_traceless_basis(n):
    """n-1 orthonormal traceless diagonal generators diag(1,..,1,-k,0,..)/sqrt(k(k+1))."""
    out = []
    for k in range(1, n):
        d = np.zeros(n)
        d[:k] = 1.0
        d[k] = -k
        out.append(np.diag(d / np.sqrt(k * (k + 1.0))))
    return np.array(out)


def _sl_basis(n):
    off = []
    for i in range(n):
        for j in range(n):
            if i != j:
                E = np.zeros((n, n))
                E[i, j] = 1.0
                off.append(E)
    return np.concatenate([np.array(off), _diag_traceless_basis(n)])


def _gl_basis(n):
    basis = np.zeros((n * n, n, n))
    for i in range(n):
        for j in range(n):
            basis[i * n + j, i, j] = 1.0
    return basis


def _diag_basis(n):
    basis = np.zeros((n, n, n))
    for i in range(n):
        basis[i, i, i] = 1.0
    return basis


def _se3_basis():
    basis = np.zeros((6, 4, 4))
    basis[:3, :3, :3] = _so_basis(3)
    for i in range(3):
        basis[3 + i, i, 3] = 1.0
    return basis


def _so3_product_basis(joints):
    n = 3 * joints
    so3 = _so_basis(3)
    basis = np.zeros((3 * joints, n, n))
    for j in range(joints):
        sl = slice(3 * j, 3 * j + 3)
        basis[3 * j : 3 * j + 3, sl, sl] = so3
    return basis


def make_descriptor(kind, n, joints=None):
    """Build the descriptor for (kind, n).

    Parameters
    ----------
    kind : AlgebraKind or str
    n : int
        Matrix size; must be 3 (block size) for SO3_PRODUCT and 4 for SE_3.
    joints : int, optional
        Number of independent 3x3 blocks (SO3_PRODUCT only, >= 1).

    Raises
    ------
    ValueError
        Unsupported (kind, n) combination.
    """
    kind = AlgebraKind(kind)
    n = int(n)
    if kind is AlgebraKind.SO3_PRODUCT:
        if n != 3:
            raise ValueError(f"SO3_PRODUCT requires block size n=3, got n={n}")
        if joints is None or int(joints) < 1:
            raise ValueError("SO3_PRODUCT requires joints >= 1")
        joints = int(joints)
        return AlgebraDescriptor(kind, 3 * joints, _so3_product_basis(joints), joints)
    if joints is not None:
        raise ValueError(f"joints is only valid for SO3_PRODUCT, not {kind.value}")
    if kind is AlgebraKind.SE_3:
        if n != 4:
            raise ValueError(f"SE_3 requires ambient size n=4, got n={n}")
        return AlgebraDescriptor(kind, 4, _se3_basis())
    if n < 2:
        raise ValueError(f"{kind.value} requires n >= 2, got n={n}")
    if kind is AlgebraKind.SO_N:
        return AlgebraDescriptor(kind, n, _so_basis(n))
    if kind is AlgebraKind.SL_N:
        return AlgebraDescriptor(kind, n, _sl_basis(n))
    if kind is AlgebraKind.GL_N:
        return AlgebraDescriptor(kind, n, _gl_basis(n))
    if kind is AlgebraKind.DIAG_N:
        return AlgebraDescriptor(kind, n, _diag_basis(n))
    raise ValueError(f"unsupported algebra kind {kind!r}")


def project(descriptor, M):
    """Orthogonal projection of an ambient matrix onto the algebra.

    Closed forms are used throughout: skew part for SO_N, trace removal for
    SL_N, identity for GL_N, diagonal extraction for DIAG_N, blockwise forms
    for SE_3 and SO3_PRODUCT.  Equal to sum_i <M, E_i> E_i by construction.
    """
    M = np.asarray(M, dtype=float)
    n = descriptor.n
    if M.shape != (n, n):
        raise ValueError(f"expected a {n}x{n} matrix, got shape {M.shape}")
    kind = descriptor.kind
    if kind is AlgebraKind.SO_N:
        return 0.5 * (M - M.T)
    if kind is AlgebraKind.SL_N:
        return M - (np.trace(M) / n) * np.eye(n)
    if kind is AlgebraKind.GL_N:
        return M.copy()
    if kind is AlgebraKind.DIAG_N:
        return np.diag(np.diag(M))
    if kind is AlgebraKind.SE_3:
        out = np.zeros((4, 4))
        out[:3, :3] = 0.5 * (M[:3, :3] - M[:3, :3].T)
        out[:3, 3] = M[:3, 3]
        return out
    if kind is AlgebraKind.SO3_PRODUCT:
        out = np.zeros_like(M)
        for j in range(descriptor.joints):
            sl = slice(3 * j, 3 * j + 3)
            B = M[sl, sl]
            out[sl, sl] = 0.5 * (B - B.T)
        return out
    raise ValueError(f"unsupported algebra kind {kind!r}")


def matrix_of(descriptor, x):
    """Realize coordinates as the ambient matrix sum_k x_k E_k."""
    x = np.asarray(x, dtype=float)
    if x.shape != (descriptor.d_g,):
        raise ValueError(f"expected coordinate vector of length {descriptor.d_g}, got {x.shape}")
    return np.tensordot(x, descriptor.basis, axes=(0, 0))


def coords_of(descriptor, M):
    """Coordinates of a matrix that lies in the algebra.

    Raises
    ------
    ValueError
        If M is detectably outside the algebra: ||M - P(M)||_F exceeds
        1e-10 relative to ||M||_F.
    """
    M = np.asarray(M, dtype=float)
    resid = np.linalg.norm(M - project(descriptor, M))
    scale = max(np.linalg.norm(M), 1.0)
    if resid > MEMBERSHIP_RTOL * scale:
        raise ValueError(
            f"matrix is not in {descriptor.kind.value}: ||M - P(M)||_F = {resid:.3e}"
        )
    return np.tensordot(descriptor.basis, M, axes=([1, 2], [0, 1]))


def hyperbolic_witness(kind, n):
    """Unit-Frobenius-norm element maximizing the top real eigenvalue.

    For GL_N and DIAG_N this is diag(1, 0, ..., 0) with lambda_max = 1; the
    trace constraint on SL_N caps it at c_n = sqrt((n-1)/n), attained by the
    traceless diagonal diag(c_n, -1/sqrt(n(n-1)), ...).

    Raises
    ------
    ValueError
        For compact kinds (and SE_3), which contain no hyperbolic element.
    """
    kind = AlgebraKind(kind)
    if kind not in (AlgebraKind.GL_N, AlgebraKind.SL_N, AlgebraKind.DIAG_N):
        raise ValueError(
            f"{kind.value} has no hyperbolic element (eigenvalues are imaginary or zero)"
        )
    desc = make_descriptor(kind, n)
    if kind in (AlgebraKind.GL_N, AlgebraKind.DIAG_N):
        H = np.zeros((n, n))
        H[0, 0] = 1.0
    else:
        d = np.full(n, -1.0 / np.sqrt(n * (n - 1.0)))
        d[0] = np.sqrt((n - 1.0) / n)
        H = np.diag(d)
    return AlgebraElement(desc, coords_of(desc, H), ambient=H)


# so(3) coordinate <-> rotation-vector conversion for the basis above.
# With basis order [(0,1), (0,2), (1,2)] and K = sum_k c_k E_k, the standard
# rotation vector w (skew(w) = K) is w = (-c2, c1, -c0)/sqrt(2).


def so3_coords_to_rotvec(c):
    """Rotation vector(s) for so(3) basis coordinates; accepts (..., 3)."""
    c = np.asarray(c, dtype=float)
    w = np.empty_like(c)
    w[..., 0] = -c[..., 2]
    w[..., 1] = c[..., 1]
    w[..., 2] = -c[..., 0]
    return w / _SQRT2


def so3_rotvec_to_coords(w):
    """Inverse of :func:`so3_coords_to_rotvec`."""
    w = np.asarray(w, dtype=float)
    c = np.empty_like(w)
    c[..., 0] = -w[..., 2]
    c[..., 1] = w[..., 1]
    c[..., 2] = -w[..., 0]
    return c * _SQRT2
