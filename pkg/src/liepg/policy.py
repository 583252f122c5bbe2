"""Gaussian policies with Lie-algebra-valued means, their score functions, and
the over-parameterized ambient baseline."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import numpy as np

from .algebra import AlgebraElement, AlgebraKind
from .expmap import rotation_angle

__all__ = [
    "ConstantBasisFeatures",
    "OrientationScaledFeatures",
    "GaussianLiePolicy",
    "AmbientPolicy",
]


class ConstantBasisFeatures:
    """Phi_k(s) = E_k: the orthonormal basis itself, per joint for products."""

    def __init__(self, descriptor):
        self.descriptor = descriptor
        self.B_Phi = 1.0
        self._ones = np.ones(descriptor.d_g)

    def scales(self, state):
        """Per-coordinate feature scales c_k(s) (Phi_k = c_k E_k)."""
        return self._ones

    def matrices(self, state):
        """The feature maps realized as ambient matrices, shape (d_g, n, n)."""
        return self.descriptor.basis


class OrientationScaledFeatures:
    """State-dependent diagonal features Phi_k(s) = (1 + beta w_k phi_j) E_k.

    phi_j is the observed rotation angle of joint j from identity and w is a
    fixed per-coordinate weight pattern, so the feature Gram (and hence the
    Fisher) spreads with the dispersion of the visited states.  SO3_PRODUCT
    only.
    """

    def __init__(self, descriptor, beta=0.5, pattern=(0.0, 0.5, 1.0)):
        if descriptor.kind is not AlgebraKind.SO3_PRODUCT:
            raise ValueError("orientation-scaled features require SO3_PRODUCT")
        self.descriptor = descriptor
        self.beta = float(beta)
        self.pattern = np.asarray(pattern, dtype=float)
        # angles are at most pi
        self.B_Phi = float(1.0 + self.beta * self.pattern.max() * np.pi)

    def scales(self, state):
        phi = rotation_angle(state.group_elements)
        return (1.0 + self.beta * phi[:, None] * self.pattern[None, :]).ravel()

    def matrices(self, state):
        return self.scales(state)[:, None, None] * self.descriptor.basis


def _truncated_normal(rng, size, cap):
    """Standard normal draws with |x| <= cap per coordinate (resampled)."""
    x = rng.standard_normal(size)
    bad = np.abs(x) > cap
    while np.any(bad):
        x[bad] = rng.standard_normal(int(bad.sum()))
        bad = np.abs(x) > cap
    return x


@dataclass(frozen=True)
class GaussianLiePolicy:
    """a = mu_theta(s) + iota(xi), mu_theta(s) = sum_k theta_k Phi_k(s) in g.

    Exploration noise is N(0, sigma^2 I) in basis coordinates, truncated at
    clip_multiplier standard deviations per coordinate; the score uses the
    unclipped Gaussian density (the truncation bias is the documented,
    unquantified mismatch).  Immutable: updates produce new values.
    """

    descriptor: object
    theta: np.ndarray
    features: object
    sigma: float
    clip_multiplier: float = 3.0

    def __post_init__(self):
        theta = np.asarray(self.theta, dtype=float)
        if theta.shape != (self.descriptor.d_g,):
            raise ValueError(
                f"theta must have length d_g={self.descriptor.d_g}, got {theta.shape}"
            )
        object.__setattr__(self, "theta", theta)
        if self.sigma <= 0:
            raise ValueError("sigma must be strictly positive")

    @property
    def d_g(self):
        return self.descriptor.d_g

    def with_theta(self, theta):
        return dataclasses.replace(self, theta=np.asarray(theta, dtype=float))

    def mean_coords(self, state):
        return self.features.scales(state) * self.theta

    def mean_action(self, state):
        """Mean action as an algebra element; linear in theta."""
        return AlgebraElement(self.descriptor, self.mean_coords(state))

    def sample_coords(self, state, rng, noise_scales=None):
        """(action coords, mean coords) with truncated Gaussian exploration."""
        mu = self.mean_coords(state)
        xi = _truncated_normal(rng, self.d_g, self.clip_multiplier)
        if noise_scales is None:
            return mu + self.sigma * xi, mu
        return mu + self.sigma * noise_scales * xi, mu

    def sample_action(self, state, rng, noise_scales=None):
        coords, _ = self.sample_coords(state, rng, noise_scales)
        return AlgebraElement(self.descriptor, coords)

    def score(self, state, action):
        """Score vector [grad_theta log pi]_k = <a - mu, Phi_k> / sigma^2."""
        coords = action.coords if isinstance(action, AlgebraElement) else np.asarray(action)
        c = self.features.scales(state)
        return c * (coords - c * self.theta) / self.sigma**2


@dataclass(frozen=True)
class AmbientPolicy:
    """Over-parameterized baseline: mean action coords = P w with a fixed
    random projection P of shape (d_g, factor * d_g), entries N(0, 1/sqrt(d_source))."""

    d_g: int
    weights: np.ndarray
    projection: np.ndarray
    sigma: float
    clip_multiplier: float = 3.0

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        P = np.asarray(self.projection, dtype=float)
        if P.shape != (self.d_g, w.shape[0]):
            raise ValueError(
                f"projection shape {P.shape} incompatible with d_g={self.d_g}, "
                f"weights {w.shape}"
            )
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "projection", P)
        if self.sigma <= 0:
            raise ValueError("sigma must be strictly positive")

    @classmethod
    def create(cls, d_g, factor, sigma, seed=0, clip_multiplier=3.0, identity=False,
               initial_mean=None):
        """Build with a seeded random projection (or identity for factor = 1).

        When initial_mean is given, weights start at the minimum-norm preimage
        P^+ mean so the initial action distribution matches a Lie policy's.
        """
        d_source = int(factor) * int(d_g)
        if identity:
            if factor != 1:
                raise ValueError("identity projection requires factor = 1")
            P = np.eye(d_g)
        else:
            rng = np.random.default_rng(np.random.SeedSequence(seed))
            P = rng.normal(0.0, 1.0 / np.sqrt(d_source), size=(d_g, d_source))
        if initial_mean is None:
            w = np.zeros(d_source)
        else:
            w = np.linalg.pinv(P) @ np.asarray(initial_mean, dtype=float)
        return cls(int(d_g), w, P, float(sigma), float(clip_multiplier))

    def with_theta(self, weights):
        return dataclasses.replace(self, weights=np.asarray(weights, dtype=float))

    @property
    def theta(self):
        return self.weights

    def mean_coords(self, state):
        return self.projection @ self.weights

    def sample_coords(self, state, rng, noise_scales=None):
        mu = self.mean_coords(state)
        xi = _truncated_normal(rng, self.d_g, self.clip_multiplier)
        if noise_scales is None:
            return mu + self.sigma * xi, mu
        return mu + self.sigma * noise_scales * xi, mu

    def score(self, state, action):
        """Score w.r.t. the weights: P^T (a - P w) / sigma^2."""
        coords = action.coords if isinstance(action, AlgebraElement) else np.asarray(action)
        return self.projection.T @ (coords - self.mean_coords(state)) / self.sigma**2
