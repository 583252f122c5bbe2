"""Lie-group MDP environments: SO(3)^J joint tracking, SE(3) rigid-body control,
the gl(n)/diagonal witness bandit with analytic derivatives, and perturbation
wrappers that break the exact symmetry in controlled ways."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .algebra import (
    AlgebraElement,
    AlgebraKind,
    coords_of,
    make_descriptor,
    matrix_of,
    project,
    so3_coords_to_rotvec,
)
from .expmap import frechet_adjoint, mat_exp, rotation_angle, se3_exp, so3_exp

__all__ = [
    "AnisotropyMode",
    "PerturbationConfig",
    "EnvState",
    "StepResult",
    "So3TrackingEnv",
    "Se3Env",
    "WitnessBandit",
    "geodesic_reward",
    "witness_reward",
    "witness_objective",
    "witness_g2",
    "witness_gradient",
]

DEFAULT_HORIZON = 20
DEFAULT_REWARD_CLIP = 1e3
TARGET_ANGLE_MAX = 0.75 * np.pi
REORTH_EVERY = 50
ORTHOGONALITY_TOL = 1e-6


class AnisotropyMode(str, Enum):
    UNIFORM = "uniform"
    AXIS_BIASED = "axis_biased"
    CORRELATED = "correlated"


@dataclass(frozen=True)
class PerturbationConfig:
    """Controlled symmetry-breaking perturbations.

    transition/observation noise are multiplicative Lie-algebra noise
    (right-multiplied exp(eps) per joint); reward noise is additive.
    The anisotropy mode rescales the policy's per-coordinate exploration
    noise: axis-biased puts sqrt(1.5) on each joint's z-rotation generator
    (the (0,1) pair, coordinate 0 per joint); correlated spreads the scales
    geometrically from sigma to sigma*sqrt(kappa_m) across coordinates.
    """

    transition_noise_sigma: float = 0.0
    observation_noise_sigma: float = 0.0
    reward_noise_sigma: float = 0.0
    anisotropy: AnisotropyMode = AnisotropyMode.UNIFORM
    kappa_m: float = 1.0

    def __post_init__(self):
        if min(self.transition_noise_sigma, self.observation_noise_sigma,
               self.reward_noise_sigma) < 0:
            raise ValueError("noise sigmas must be nonnegative")
        if self.anisotropy is AnisotropyMode.CORRELATED and self.kappa_m < 1.0:
            raise ValueError("kappa_m must be >= 1 for correlated anisotropy")

    def noise_scales(self, d_g):
        """Per-coordinate sampling-noise scale factors (length d_g)."""
        if self.anisotropy is AnisotropyMode.UNIFORM:
            return np.ones(d_g)
        if self.anisotropy is AnisotropyMode.AXIS_BIASED:
            scales = np.ones(d_g)
            scales[0::3] = np.sqrt(1.5)
            return scales
        if d_g == 1:
            return np.ones(1)
        expo = np.arange(d_g) / (2.0 * (d_g - 1))
        return self.kappa_m**expo


@dataclass
class EnvState:
    """Group-element state: (J, 3, 3) rotations for SO(3)^J or one (4, 4) pose."""

    group_elements: np.ndarray
    step_index: int = 0


@dataclass
class StepResult:
    next_state: EnvState
    reward: float
    observation: EnvState


def _polar_orthonormalize(R):
    """Nearest rotation(s) by polar factor; accepts (..., 3, 3)."""
    U, _, Vt = np.linalg.svd(R)
    out = U @ Vt
    # keep det = +1 (flip the smallest singular direction if needed)
    det = np.linalg.det(out)
    if np.any(det < 0):
        flip = np.where(det < 0)
        U = U.copy()
        U[flip + (slice(None), -1)] *= -1.0
        out = U @ Vt
    return out


def geodesic_reward(rotations, targets):
    """Negative summed squared geodesic error: -sum_j ||log(R_j^T R_j*)||_F^2.

    ||log||_F^2 = 2 phi^2 with phi the rotation angle of R_j^T R_j*.
    """
    err = np.swapaxes(rotations, -1, -2) @ targets
    phi = rotation_angle(err)
    return float(-np.sum(2.0 * phi**2))


class So3TrackingEnv:
    """SO(3)^J joint tracking with per-episode random targets.

    Dynamics: R_j <- R_j exp(omega_j) (right action), optionally followed by
    multiplicative transition noise exp(eps_j).  Reward is the negative summed
    squared geodesic error to the episode's fixed targets, clipped at
    +-reward_clip.  One instance is single-threaded; distinct seeds give
    independent deterministic runs.
    """

    def __init__(self, joints, seed=0, perturbation=None, horizon=DEFAULT_HORIZON,
                 target_angle_max=TARGET_ANGLE_MAX, reward_clip=DEFAULT_REWARD_CLIP,
                 target_mode="fixed"):
        if target_mode not in ("fixed", "per_episode"):
            raise ValueError("target_mode must be 'fixed' or 'per_episode'")
        self.joints = int(joints)
        self.descriptor = make_descriptor(AlgebraKind.SO3_PRODUCT, 3, joints=self.joints)
        self.perturbation = perturbation or PerturbationConfig()
        self.horizon = int(horizon)
        self.target_angle_max = float(target_angle_max)
        self.reward_clip = float(reward_clip)
        self.target_mode = target_mode
        self.targets = None
        self._seed(seed)

    def _seed(self, seed):
        root = np.random.SeedSequence(seed)
        targets, transition, observation, reward = root.spawn(4)
        self._target_rng = np.random.default_rng(targets)
        self._transition_rng = np.random.default_rng(transition)
        self._observation_rng = np.random.default_rng(observation)
        self._reward_rng = np.random.default_rng(reward)
        if self.target_mode == "fixed":
            self.targets = self._random_rotations(self._target_rng, self.joints,
                                                  self.target_angle_max)

    def _random_rotations(self, rng, count, angle_max):
        axes = rng.normal(size=(count, 3))
        axes /= np.linalg.norm(axes, axis=1, keepdims=True)
        angles = rng.uniform(0.0, angle_max, size=count)
        return so3_exp(axes * angles[:, None])

    def reset(self, seed=None):
        """Start a new episode at identity rotations.

        Targets are drawn once per (env, seed) in "fixed" mode (default) and
        redrawn every episode in "per_episode" mode.
        """
        if seed is not None:
            self._seed(seed)
        if self.target_mode == "per_episode":
            self.targets = self._random_rotations(self._target_rng, self.joints,
                                                  self.target_angle_max)
        return EnvState(np.broadcast_to(np.eye(3), (self.joints, 3, 3)).copy(), 0)

    def _action_coords(self, action):
        if isinstance(action, AlgebraElement):
            d = action.descriptor
            if d.kind is not AlgebraKind.SO3_PRODUCT or d.joints != self.joints:
                raise ValueError(
                    f"action algebra mismatch: expected so(3)^{self.joints}, got {d!r}"
                )
            return action.coords
        coords = np.asarray(action, dtype=float)
        if coords.shape != (3 * self.joints,):
            raise ValueError(
                f"expected {3 * self.joints} action coordinates, got shape {coords.shape}"
            )
        return coords

    def step(self, state, action):
        coords = self._action_coords(action)
        w = so3_coords_to_rotvec(coords.reshape(self.joints, 3))
        R = state.group_elements @ so3_exp(w)
        p = self.perturbation
        if p.transition_noise_sigma > 0:
            eps = self._transition_rng.normal(0.0, p.transition_noise_sigma,
                                              size=(self.joints, 3))
            R = R @ so3_exp(eps)
        idx = state.step_index + 1
        if idx % REORTH_EVERY == 0:
            R = _polar_orthonormalize(R)
        reward = geodesic_reward(R, self.targets)
        if p.reward_noise_sigma > 0:
            reward += float(self._reward_rng.normal(0.0, p.reward_noise_sigma))
        reward = float(np.clip(reward, -self.reward_clip, self.reward_clip))
        next_state = EnvState(R, idx)
        if p.observation_noise_sigma > 0:
            delta = self._observation_rng.normal(0.0, p.observation_noise_sigma,
                                                 size=(self.joints, 3))
            observation = EnvState(R @ so3_exp(delta), idx)
        else:
            observation = next_state
        return StepResult(next_state, reward, observation)


class Se3Env:
    """SE(3) rigid-body pose control toward a fixed random target pose.

    Reward: -(rotation geodesic error squared + squared translation distance),
    unit weights.  Same perturbation semantics as the SO(3)^J environment.
    """

    def __init__(self, seed=0, perturbation=None, horizon=DEFAULT_HORIZON,
                 target_angle_max=TARGET_ANGLE_MAX, target_radius=1.0,
                 reward_clip=DEFAULT_REWARD_CLIP):
        self.descriptor = make_descriptor(AlgebraKind.SE_3, 4)
        self.perturbation = perturbation or PerturbationConfig()
        self.horizon = int(horizon)
        self.target_angle_max = float(target_angle_max)
        self.target_radius = float(target_radius)
        self.reward_clip = float(reward_clip)
        self.target_rotation = None
        self.target_translation = None
        self._seed(seed)

    def _seed(self, seed):
        root = np.random.SeedSequence(seed)
        targets, transition, observation, reward = root.spawn(4)
        self._target_rng = np.random.default_rng(targets)
        self._transition_rng = np.random.default_rng(transition)
        self._observation_rng = np.random.default_rng(observation)
        self._reward_rng = np.random.default_rng(reward)

    def reset(self, seed=None):
        if seed is not None:
            self._seed(seed)
        rng = self._target_rng
        axis = rng.normal(size=3)
        axis /= np.linalg.norm(axis)
        angle = rng.uniform(0.0, self.target_angle_max)
        self.target_rotation = so3_exp(axis * angle)
        self.target_translation = rng.normal(0.0, self.target_radius, size=3)
        return EnvState(np.eye(4), 0)

    def _action_parts(self, action):
        if isinstance(action, AlgebraElement):
            if action.descriptor.kind is not AlgebraKind.SE_3:
                raise ValueError(f"action algebra mismatch: expected se(3), got "
                                 f"{action.descriptor!r}")
            coords = action.coords
        else:
            coords = np.asarray(action, dtype=float)
            if coords.shape != (6,):
                raise ValueError(f"expected 6 action coordinates, got shape {coords.shape}")
        return so3_coords_to_rotvec(coords[:3]), coords[3:]

    def step(self, state, action):
        w, v = self._action_parts(action)
        T = state.group_elements @ se3_exp(w, v)
        p = self.perturbation
        if p.transition_noise_sigma > 0:
            eps = self._transition_rng.normal(0.0, p.transition_noise_sigma, size=6)
            T = T @ se3_exp(eps[:3], eps[3:])
        idx = state.step_index + 1
        if idx % REORTH_EVERY == 0:
            T = T.copy()
            T[:3, :3] = _polar_orthonormalize(T[:3, :3])
            T[3] = (0.0, 0.0, 0.0, 1.0)
        phi = float(rotation_angle(T[:3, :3].T @ self.target_rotation))
        dp = T[:3, 3] - self.target_translation
        reward = -(2.0 * phi**2 + float(dp @ dp))
        if p.reward_noise_sigma > 0:
            reward += float(self._reward_rng.normal(0.0, p.reward_noise_sigma))
        reward = float(np.clip(reward, -self.reward_clip, self.reward_clip))
        next_state = EnvState(T, idx)
        if p.observation_noise_sigma > 0:
            delta = self._observation_rng.normal(0.0, p.observation_noise_sigma, size=6)
            observation = EnvState(T @ se3_exp(delta[:3], delta[3:]), idx)
        else:
            observation = next_state
        return StepResult(next_state, reward, observation)


def witness_reward(M):
    """Single-state bandit reward r(a) = -1/2 ||exp(a) - I||_F^2."""
    M = np.asarray(M, dtype=float)
    E = mat_exp(M) - np.eye(M.shape[0])
    return -0.5 * float(np.sum(E * E))


class WitnessBandit:
    """One-step bandit on a non-compact algebra with the rank-one exponential
    reward; the ray-restricted objective has the analytic second derivative
    of :func:`witness_g2`."""

    def __init__(self, descriptor, seed=0, reward_clip=np.inf):
        self.descriptor = descriptor
        self.horizon = 1
        self.perturbation = PerturbationConfig()
        self.reward_clip = float(reward_clip)
        self._seed(seed)

    def _seed(self, seed):
        self._rng = np.random.default_rng(np.random.SeedSequence(seed))

    def reset(self, seed=None):
        if seed is not None:
            self._seed(seed)
        return EnvState(np.eye(self.descriptor.n), 0)

    def step(self, state, action):
        if isinstance(action, AlgebraElement):
            coords = action.coords
        else:
            coords = np.asarray(action, dtype=float)
        reward = witness_reward(matrix_of(self.descriptor, coords))
        reward = float(np.clip(reward, -self.reward_clip, self.reward_clip))
        next_state = EnvState(state.group_elements, state.step_index + 1)
        return StepResult(next_state, reward, next_state)


def witness_objective(theta, sigma, n_mc=1024, seed=0):
    """J(theta) = E_{xi ~ N(0, sigma^2 I)}[r(theta + xi)] for the witness reward.

    Exact when sigma = 0; Monte Carlo over the algebra's coordinate noise
    otherwise (n_mc >= 1 required).
    """
    if not isinstance(theta, AlgebraElement):
        raise TypeError("theta must be an AlgebraElement")
    if sigma < 0:
        raise ValueError("sigma must be nonnegative")
    if sigma == 0:
        return witness_reward(theta.ambient)
    if n_mc < 1:
        raise ValueError("n_mc must be >= 1 when sigma > 0")
    desc = theta.descriptor
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    xi = rng.normal(0.0, sigma, size=(int(n_mc), desc.d_g))
    total = 0.0
    for i in range(int(n_mc)):
        total += witness_reward(matrix_of(desc, theta.coords + xi[i]))
    return total / int(n_mc)


def witness_g2(t, sigma=0.0):
    """Analytic second derivative of the ray-restricted witness objective.

    g''(t) = -(2 e^{2t} - e^t) deterministically, and
    -(2 e^{2t + 2 sigma^2} - e^{t + sigma^2 / 2}) under coordinate noise.
    """
    if sigma == 0:
        return -(2.0 * np.exp(2.0 * t) - np.exp(t))
    s2 = sigma * sigma
    return -(2.0 * np.exp(2.0 * t + 2.0 * s2) - np.exp(t + s2 / 2.0))


def witness_gradient(theta):
    """Exact gradient of the deterministic witness objective.

    grad = -P_g(D_theta^*[exp(theta) - I]) via the Frechet adjoint.
    """
    if not isinstance(theta, AlgebraElement):
        raise TypeError("theta must be an AlgebraElement")
    desc = theta.descriptor
    M = theta.ambient
    ambient_grad = -frechet_adjoint(M, mat_exp(M) - np.eye(desc.n))
    g = project(desc, ambient_grad)
    return AlgebraElement(desc, coords_of(desc, g), ambient=g)
