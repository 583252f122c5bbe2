"""Projected policy-gradient optimization: the Lie-projected update with radius
projection, the ambient baseline, and exact/CG-truncated natural gradient."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
import scipy.linalg

from .algebra import AlgebraKind, coords_of, matrix_of, project
from .estimation import (
    RIDGE_SCALE,
    Trajectory,
    alignment,
    fisher_from_scores,
    reinforce_gradient,
)
from .policy import AmbientPolicy

__all__ = [
    "Method",
    "Schedule",
    "OptimizerConfig",
    "RunRecord",
    "step_size",
    "radius_project",
    "collect_trajectories",
    "lpg_run",
    "natural_gradient_run",
    "cg_solve",
]

_SQRT2 = float(np.sqrt(2.0))


class Method(str, Enum):
    LPG = "lpg"
    AMBIENT_PG = "ambient_pg"
    NATGRAD_CHOL = "natgrad_chol"
    NATGRAD_CG = "natgrad_cg"


class Schedule(str, Enum):
    CONSTANT_OVER_SQRT_T = "constant_over_sqrt_t"
    DIMINISHING = "diminishing"
    CONSTANT = "constant"


@dataclass(frozen=True)
class OptimizerConfig:
    method: Method = Method.LPG
    eta: float = 0.25
    schedule: Schedule = Schedule.CONSTANT
    B_theta: float = np.inf
    T: int = 40
    episodes_per_iter: int = 8
    gamma: float = 0.99
    seed: int = 0
    cg_iters: int = 10
    log_fisher: bool = True

    def __post_init__(self):
        object.__setattr__(self, "method", Method(self.method))
        object.__setattr__(self, "schedule", Schedule(self.schedule))
        if self.eta <= 0:
            raise ValueError("eta must be strictly positive")
        if self.T < 1:
            raise ValueError("T must be >= 1")
        if self.episodes_per_iter < 1:
            raise ValueError("episodes_per_iter must be >= 1")
        if self.cg_iters < 1:
            raise ValueError("cg_iters must be >= 1")
        if not (self.B_theta > 0):
            raise ValueError("B_theta must be positive (np.inf allowed)")


PHASES = ("rollout", "gradient", "precondition", "update")


@dataclass
class RunRecord:
    """Per-iteration log of one optimization run."""

    iteration: np.ndarray
    mean_return: np.ndarray
    grad_norm: np.ndarray
    theta_norm: np.ndarray
    projection_triggered: np.ndarray
    alignment: np.ndarray
    kappa: np.ndarray
    epsilon_F: np.ndarray
    wall_micros: dict
    proj_deviation: np.ndarray
    solver_fallback: np.ndarray
    aborted: bool = False
    abort_reason: str = ""

    @classmethod
    def empty(cls, T):
        return cls(
            iteration=np.arange(T),
            mean_return=np.full(T, np.nan),
            grad_norm=np.full(T, np.nan),
            theta_norm=np.full(T, np.nan),
            projection_triggered=np.zeros(T, dtype=bool),
            alignment=np.full(T, np.nan),
            kappa=np.full(T, np.nan),
            epsilon_F=np.full(T, np.nan),
            wall_micros={p: np.full(T, np.nan) for p in PHASES},
            proj_deviation=np.full(T, np.nan),
            solver_fallback=np.zeros(T, dtype=bool),
        )

    def truncate(self, n):
        self.iteration = self.iteration[:n]
        self.mean_return = self.mean_return[:n]
        self.grad_norm = self.grad_norm[:n]
        self.theta_norm = self.theta_norm[:n]
        self.projection_triggered = self.projection_triggered[:n]
        self.alignment = self.alignment[:n]
        self.kappa = self.kappa[:n]
        self.epsilon_F = self.epsilon_F[:n]
        self.wall_micros = {p: v[:n] for p, v in self.wall_micros.items()}
        self.proj_deviation = self.proj_deviation[:n]
        self.solver_fallback = self.solver_fallback[:n]

    def rows(self):
        out = []
        for i in range(len(self.iteration)):
            row = {
                "iteration": int(self.iteration[i]),
                "mean_return": self.mean_return[i],
                "grad_norm": self.grad_norm[i],
                "theta_norm": self.theta_norm[i],
                "projection_triggered": int(self.projection_triggered[i]),
                "alignment": self.alignment[i],
                "kappa": self.kappa[i],
                "epsilon_F": self.epsilon_F[i],
            }
            for p in PHASES:
                row[f"wall_{p}_micros"] = self.wall_micros[p][i]
            out.append(row)
        return out


def step_size(schedule, eta, t, T):
    """eta/sqrt(T) (constant over the horizon), eta/sqrt(t+1), or plain eta."""
    if not 0 <= t < T:
        raise ValueError(f"iteration index {t} outside [0, {T})")
    schedule = Schedule(schedule)
    if schedule is Schedule.CONSTANT_OVER_SQRT_T:
        return eta / np.sqrt(T)
    if schedule is Schedule.DIMINISHING:
        return eta / np.sqrt(t + 1.0)
    return eta


def radius_project(theta, B):
    """Rescale theta to Frobenius norm B when exceeded; direction preserved."""
    theta = np.asarray(theta, dtype=float)
    if not (B > 0):
        raise ValueError("B must be positive (np.inf allowed)")
    norm = np.linalg.norm(theta)
    if norm <= B:
        return theta, False
    return theta * (B / norm), True


def collect_trajectories(env, policy, episodes, rng, noise_scales=None):
    """Roll out full episodes; trajectories store the observed states."""
    out = []
    for _ in range(episodes):
        state = env.reset()
        obs = state
        states, actions, rewards = [], [], []
        for _ in range(env.horizon):
            a, _ = policy.sample_coords(obs, rng, noise_scales)
            result = env.step(state, a)
            states.append(obs)
            actions.append(a)
            rewards.append(result.reward)
            state = result.next_state
            obs = result.observation
        out.append(Trajectory(states, actions, np.asarray(rewards)))
    return out


def project_gradient_coords(descriptor, g):
    """Algebra projection of a coordinate-space gradient (Alg. step v = P_g(g)).

    For SO3_PRODUCT this is the O(n^2 J) blockwise skew-symmetrization of the
    per-joint matrix blocks (compiled kernel); other kinds go through the
    ambient realization.  For Lie policies the result equals g up to round-off
    (the gradient already lives in g).
    """
    if descriptor.kind is AlgebraKind.SO3_PRODUCT:
        from ._kernels import so3_block_project

        return so3_block_project(np.ascontiguousarray(g), descriptor.joints)
    M = project(descriptor, matrix_of(descriptor, g))
    return np.tensordot(descriptor.basis, M, axes=([1, 2], [0, 1]))


def cg_solve(matvec, b, iters, x0=None):
    """k iterations of conjugate gradients on an SPD operator, from x0 = 0."""
    x = np.zeros_like(b) if x0 is None else x0.copy()
    r = b - matvec(x)
    p = r.copy()
    rs = float(r @ r)
    for _ in range(iters):
        if rs == 0.0:
            break
        Ap = matvec(p)
        denom = float(p @ Ap)
        if denom <= 0.0:
            break
        a = rs / denom
        x = x + a * p
        r = r - a * Ap
        rs_new = float(r @ r)
        p = r + (rs_new / rs) * p
        rs = rs_new
    return x


def _fisher_ridge(scores):
    d = scores.shape[1]
    tr = float(np.sum(scores * scores)) / scores.shape[0]
    return RIDGE_SCALE * tr / d


def _natgrad_direction(method, scores, g, cg_iters):
    """Solve F_hat v = g; returns (v, fallback_used).

    NATGRAD_CG never materializes F_hat: matvecs use the sample scores
    (Monte Carlo Fisher).  The direction is rescaled to ||g|| afterwards by
    the caller so step magnitudes are comparable across methods.
    """
    n = scores.shape[0]
    ridge = _fisher_ridge(scores)
    if method is Method.NATGRAD_CHOL:
        F = scores.T @ scores / n
        F = 0.5 * (F + F.T) + ridge * np.eye(F.shape[0])
        try:
            c = scipy.linalg.cho_factor(F, check_finite=False)
            return scipy.linalg.cho_solve(c, g, check_finite=False), False
        except scipy.linalg.LinAlgError:
            pass
        matvec = lambda v: scores.T @ (scores @ v) / n + ridge * v
        return cg_solve(matvec, g, max(cg_iters, len(g))), True
    matvec = lambda v: scores.T @ (scores @ v) / n + ridge * v
    return cg_solve(matvec, g, cg_iters), False


def _run_oracle(objective, theta0, cfg):
    """Projected gradient ascent against an analytic gradient oracle."""
    theta = np.asarray(theta0, dtype=float).copy()
    record = RunRecord.empty(cfg.T)
    rng = np.random.default_rng(np.random.SeedSequence(cfg.seed))
    noise_sigma = getattr(objective, "noise_sigma", 0.0)
    descriptor = getattr(objective, "descriptor", None)
    for t in range(cfg.T):
        g_true = objective.exact_gradient(theta)
        g = g_true
        if noise_sigma > 0:
            g = g + rng.normal(0.0, noise_sigma, size=theta.shape)
        record.mean_return[t] = objective.value(theta)
        record.grad_norm[t] = np.linalg.norm(g_true)
        record.theta_norm[t] = np.linalg.norm(theta)
        if descriptor is not None:
            v = project_gradient_coords(descriptor, g)
            gn = np.linalg.norm(g)
            record.proj_deviation[t] = (
                np.linalg.norm(v - g) / gn if gn > 0 else 0.0
            )
        else:
            v = g
        eta_t = step_size(cfg.schedule, cfg.eta, t, cfg.T)
        theta, triggered = radius_project(theta + eta_t * v, cfg.B_theta)
        record.projection_triggered[t] = triggered
    return theta, record


def lpg_run(env, policy, cfg):
    """Run Algorithm LPG (or a baseline selected by cfg.method).

    Per iteration: roll out episodes, form the REINFORCE gradient, project it
    onto the algebra (a no-op up to round-off for Lie policies, asserted via
    the recorded deviation), step with the scheduled size, and radius-project
    the iterate.  Returns (final policy, RunRecord).

    ``env`` may instead be an analytic objective exposing ``exact_gradient``;
    ``policy`` is then the initial coordinate vector.
    """
    if hasattr(env, "exact_gradient"):
        return _run_oracle(env, policy, cfg)

    is_ambient = isinstance(policy, AmbientPolicy)
    if not is_ambient:
        pd, ed = policy.descriptor, env.descriptor
        if pd.kind is not ed.kind or pd.n != ed.n:
            raise ValueError(f"policy algebra {pd!r} does not match env {ed!r}")
    method = cfg.method
    if is_ambient and method is not Method.AMBIENT_PG:
        raise ValueError("ambient policies run with method AMBIENT_PG")

    record = RunRecord.empty(cfg.T)
    rng = np.random.default_rng(np.random.SeedSequence(cfg.seed))
    noise_scales = None
    if env.perturbation is not None:
        scales = env.perturbation.noise_scales(
            policy.d_g if not is_ambient else env.descriptor.d_g
        )
        if np.any(scales != 1.0):
            noise_scales = scales

    for t in range(cfg.T):
        t0 = time.perf_counter()
        trajectories = collect_trajectories(
            env, policy, cfg.episodes_per_iter, rng, noise_scales
        )
        t1 = time.perf_counter()
        g = reinforce_gradient(policy, trajectories, cfg.gamma)
        t2 = time.perf_counter()

        record.mean_return[t] = float(
            np.mean([traj.rewards.sum() for traj in trajectories])
        )
        record.grad_norm[t] = np.linalg.norm(g)
        record.theta_norm[t] = np.linalg.norm(policy.theta)
        if not np.all(np.isfinite(g)):
            record.aborted = True
            record.abort_reason = f"non-finite gradient at iteration {t}"
            record.truncate(t + 1)
            return policy, record

        samples = [
            (s, a) for traj in trajectories for s, a in zip(traj.states, traj.actions)
        ]
        scores = None

        # Preconditioning is each method's own per-iteration work: the algebra
        # projection for LPG; score assembly (the Monte Carlo Fisher
        # representation) plus the solve for the natural-gradient methods.
        t3 = time.perf_counter()
        if method is Method.LPG:
            v = project_gradient_coords(policy.descriptor, g)
        elif method is Method.AMBIENT_PG:
            v = g
        else:
            scores = np.array([policy.score(s, a) for s, a in samples])
            v, fallback = _natgrad_direction(method, scores, g, cfg.cg_iters)
            record.solver_fallback[t] = fallback
            vnorm = np.linalg.norm(v)
            if vnorm > 0:
                v = v * (np.linalg.norm(g) / vnorm)
        t4 = time.perf_counter()

        # diagnostics (instrumentation, not timed as a phase)
        if cfg.log_fisher and not is_ambient:
            if scores is None:
                scores = np.array([policy.score(s, a) for s, a in samples])
            fisher = fisher_from_scores(scores)
            record.kappa[t] = fisher.kappa
            record.epsilon_F[t] = fisher.epsilon_F
            gn = np.linalg.norm(g)
            if gn > 0:
                record.alignment[t] = alignment(g, fisher.matrix)
        if method is Method.LPG:
            gn = np.linalg.norm(g)
            record.proj_deviation[t] = np.linalg.norm(v - g) / gn if gn > 0 else 0.0

        eta_t = step_size(cfg.schedule, cfg.eta, t, cfg.T)
        theta_new, triggered = radius_project(policy.theta + eta_t * v, cfg.B_theta)
        policy = policy.with_theta(theta_new)
        record.projection_triggered[t] = triggered
        t5 = time.perf_counter()

        record.wall_micros["rollout"][t] = (t1 - t0) * 1e6
        record.wall_micros["gradient"][t] = (t2 - t1) * 1e6
        record.wall_micros["precondition"][t] = (t4 - t3) * 1e6
        record.wall_micros["update"][t] = (t5 - t4) * 1e6

    return policy, record


def natural_gradient_run(env, policy, cfg):
    """lpg_run specialised to the natural-gradient methods."""
    if cfg.method not in (Method.NATGRAD_CHOL, Method.NATGRAD_CG):
        raise ValueError("natural_gradient_run requires a NATGRAD method")
    return lpg_run(env, policy, cfg)
