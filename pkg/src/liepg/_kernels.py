"""Compiled fixed-rate kernels for the scaling benchmarks.

Library BLAS has per-call overhead and size-dependent efficiency that masks
the algorithmic exponents at small sizes, so the benchmark times textbook
implementations whose flop rate is size-uniform.  The repetition loop lives
inside the compiled function to keep dispatch overhead out of the measurement.
"""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True)
def chol_solve_reps(F, g, reps):
    """reps repetitions of: Cholesky-factor F and solve F v = g."""
    d = F.shape[0]
    acc = 0.0
    for _ in range(reps):
        L = np.zeros((d, d))
        for i in range(d):
            for j in range(i + 1):
                s = F[i, j]
                for k in range(j):
                    s -= L[i, k] * L[j, k]
                if i == j:
                    L[i, i] = np.sqrt(s)
                else:
                    L[i, j] = s / L[j, j]
        y = np.zeros(d)
        for i in range(d):
            s = g[i]
            for k in range(i):
                s -= L[i, k] * y[k]
            y[i] = s / L[i, i]
        v = np.zeros(d)
        for i in range(d - 1, -1, -1):
            s = y[i]
            for k in range(i + 1, d):
                s -= L[k, i] * v[k]
            v[i] = s / L[i, i]
        acc += v[0]
    return acc


@njit(cache=True)
def so3_block_project(coords, joints):
    """Blockwise skew-symmetrization of per-joint so(3) coordinate blocks.

    Realizes each joint's 3 coordinates as the 3x3 matrix block, applies
    P(M) = (M - M^T)/2, and reads the coordinates back.
    """
    out = np.empty_like(coords)
    K = np.empty((3, 3))
    inv_sqrt2 = 1.0 / np.sqrt(2.0)
    for j in range(joints):
        c0 = coords[3 * j] * inv_sqrt2
        c1 = coords[3 * j + 1] * inv_sqrt2
        c2 = coords[3 * j + 2] * inv_sqrt2
        K[0, 0] = 0.0
        K[0, 1] = c0
        K[0, 2] = c1
        K[1, 0] = -c0
        K[1, 1] = 0.0
        K[1, 2] = c2
        K[2, 0] = -c1
        K[2, 1] = -c2
        K[2, 2] = 0.0
        out[3 * j] = (0.5 * (K[0, 1] - K[1, 0])) / inv_sqrt2
        out[3 * j + 1] = (0.5 * (K[0, 2] - K[2, 0])) / inv_sqrt2
        out[3 * j + 2] = (0.5 * (K[1, 2] - K[2, 1])) / inv_sqrt2
    return out


@njit(cache=True)
def blockwise_skew_reps(blocks, reps):
    """reps repetitions of skew-symmetrizing J stacked 3x3 blocks."""
    J = blocks.shape[0]
    out = np.empty_like(blocks)
    acc = 0.0
    for _ in range(reps):
        for j in range(J):
            for a in range(3):
                for b in range(3):
                    out[j, a, b] = 0.5 * (blocks[j, a, b] - blocks[j, b, a])
        acc += out[0, 0, 1]
    return acc
