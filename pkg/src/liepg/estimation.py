"""Policy-gradient and Fisher estimation, isotropy/conditioning statistics, and
the Kantorovich alignment diagnostics."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

__all__ = [
    "Trajectory",
    "FisherEstimate",
    "ZeroGradientError",
    "reinforce_gradient",
    "estimate_fisher",
    "fisher_from_scores",
    "fisher_stats",
    "kantorovich_bound",
    "alignment",
    "block_structure_check",
]

RIDGE_SCALE = 1e-8
ADVANTAGE_STD_FLOOR = 1e-8


class ZeroGradientError(ValueError):
    """Alignment is undefined for a zero gradient."""


@dataclass
class Trajectory:
    """One episode: observed states, action coordinates, per-step rewards."""

    states: list
    actions: list
    rewards: np.ndarray

    def __post_init__(self):
        self.rewards = np.asarray(self.rewards, dtype=float)
        if not (len(self.states) == len(self.actions) == len(self.rewards)):
            raise ValueError("states, actions and rewards must have equal lengths")
        if not np.all(np.isfinite(self.rewards)):
            raise ValueError("rewards must be finite")

    @property
    def length(self):
        return len(self.rewards)


@dataclass
class FisherEstimate:
    """Empirical Fisher matrix with spectrum-derived diagnostics."""

    matrix: np.ndarray
    eigenvalues: np.ndarray
    kappa: float
    epsilon_F: float
    effective_rank: float
    sample_count: int
    ridge: float


def _returns_to_go(rewards, gamma):
    G = np.empty_like(rewards)
    acc = 0.0
    for t in range(len(rewards) - 1, -1, -1):
        acc = rewards[t] + gamma * acc
        G[t] = acc
    return G


def reinforce_gradient(policy, trajectories, gamma):
    """REINFORCE estimate with batch advantage normalization.

    Per-step discounted returns-to-go are normalized to zero mean / unit
    variance over the whole batch (zero-guarded when the spread is below
    1e-8), multiplied by the score, and averaged over all steps.
    """
    if len(trajectories) == 0:
        raise ValueError("reinforce_gradient requires at least one trajectory")
    returns = [_returns_to_go(traj.rewards, gamma) for traj in trajectories]
    flat = np.concatenate(returns)
    std = float(flat.std())
    mean = float(flat.mean())
    grad = None
    count = 0
    for traj, G in zip(trajectories, returns):
        if std < ADVANTAGE_STD_FLOOR:
            adv = np.zeros_like(G)
        else:
            adv = (G - mean) / std
        for t in range(traj.length):
            s = adv[t] * policy.score(traj.states[t], traj.actions[t])
            grad = s if grad is None else grad + s
            count += 1
    return grad / count


def _spectrum_stats(eigenvalues, matrix):
    d = len(eigenvalues)
    lam_bar = float(np.mean(eigenvalues))
    dev = matrix - lam_bar * np.eye(d)
    norm = float(np.linalg.norm(matrix))
    epsilon_F = float(np.linalg.norm(dev)) / norm if norm > 0 else 0.0
    s1 = float(np.sum(eigenvalues))
    s2 = float(np.sum(eigenvalues**2))
    eff_rank = s1 * s1 / s2 if s2 > 0 else 0.0
    kappa = float(eigenvalues[-1] / eigenvalues[0])
    return max(kappa, 1.0), epsilon_F, eff_rank


def fisher_from_scores(scores):
    """Fisher estimate from a pre-assembled (n_samples, d_g) score matrix."""
    scores = np.asarray(scores, dtype=float)
    n, d = scores.shape
    if n < d:
        warnings.warn(
            f"Fisher estimated from {n} samples < d_g = {d}; ridge floor dominates",
            stacklevel=2,
        )
    F = scores.T @ scores / n
    F = 0.5 * (F + F.T)
    ridge = RIDGE_SCALE * np.trace(F) / d
    F = F + ridge * np.eye(d)
    eig = np.linalg.eigvalsh(F)
    eig = np.maximum(eig, max(ridge, 1e-300))
    kappa, eps, eff = _spectrum_stats(eig, F)
    return FisherEstimate(F, eig, kappa, eps, eff, n, float(ridge))


def estimate_fisher(policy, samples):
    """Empirical Fisher from score outer products over on-policy (s, a) pairs.

    F_hat = mean of score score^T, symmetrized, plus the ridge
    1e-8 tr(F_hat)/d * I.  Emits a warning when the sample count is below the
    parameter dimension (the ridge floor then dominates the small spectrum).
    """
    return fisher_from_scores(np.array([policy.score(s, a) for s, a in samples]))


def fisher_stats(F):
    """(kappa, epsilon_F, effective_rank) of a symmetric PSD matrix.

    An eigenvalue below the ridge floor 1e-8 tr(F)/d is clamped to the floor
    for kappa and flagged with a warning.
    """
    F = np.asarray(F, dtype=float)
    if F.ndim != 2 or F.shape[0] != F.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {F.shape}")
    if np.linalg.norm(F - F.T) > 1e-10 * max(1.0, np.linalg.norm(F)):
        raise ValueError("Fisher matrix must be symmetric")
    eig = np.linalg.eigvalsh(F)
    if eig[0] < -1e-10:
        raise ValueError(f"Fisher matrix must be PSD; lambda_min = {eig[0]:.3e}")
    floor = RIDGE_SCALE * max(np.trace(F), 0.0) / F.shape[0]
    if eig[0] < floor:
        warnings.warn(
            f"lambda_min = {eig[0]:.3e} below ridge floor {floor:.3e}; "
            "kappa computed against the floor",
            stacklevel=2,
        )
        eig = np.maximum(eig, max(floor, 1e-300))
    return _spectrum_stats(eig, F)


def kantorovich_bound(kappa):
    """Worst-case alignment 2 sqrt(kappa) / (kappa + 1) for condition number kappa."""
    if kappa < 1.0:
        raise ValueError(f"kappa must be >= 1, got {kappa}")
    return 2.0 * np.sqrt(kappa) / (kappa + 1.0)


def alignment(g, F):
    """Cosine between g and the preconditioned direction F^{-1} g.

    For PSD F this never falls below kantorovich_bound(kappa(F)).
    """
    g = np.asarray(g, dtype=float)
    gnorm = np.linalg.norm(g)
    if gnorm == 0.0:
        raise ZeroGradientError("alignment is undefined for a zero gradient")
    F = np.asarray(F, dtype=float)
    v = np.linalg.solve(F, g)
    denom = gnorm * np.linalg.norm(v)
    return float(np.clip(np.dot(g, v) / denom, -1.0, 1.0))


def block_structure_check(F, joints):
    """Maximum |off-block entry| / mean diagonal for a 3x3-blocked Fisher."""
    F = np.asarray(F, dtype=float)
    d = F.shape[0]
    if F.shape != (d, d) or d != 3 * joints:
        raise ValueError(f"expected a {3 * joints}x{3 * joints} matrix, got {F.shape}")
    mask = np.ones_like(F, dtype=bool)
    for j in range(joints):
        sl = slice(3 * j, 3 * j + 3)
        mask[sl, sl] = False
    off_max = float(np.max(np.abs(F[mask]))) if joints > 1 else 0.0
    diag_mean = float(np.mean(np.diag(F)))
    if diag_mean <= 0:
        raise ValueError("mean diagonal must be positive")
    return off_max / diag_mean
