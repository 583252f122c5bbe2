"""Experiment drivers: Lipschitz probes and the dichotomy sweep, convergence
slope fits, timing benchmarks, anisotropy/robustness ablations, the SE(3)
divergence study, and the paired method comparison.

Every driver is a pure function of (config, seeds) and returns plain row
dictionaries ready for CSV emission; numeric columns are reproducible
bit-for-bit for identical inputs (timing columns excepted).
"""

from __future__ import annotations

import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .algebra import AlgebraKind, coords_of, make_descriptor, matrix_of, project
from .envs import (
    AnisotropyMode,
    PerturbationConfig,
    Se3Env,
    So3TrackingEnv,
    witness_gradient,
)
from .estimation import kantorovich_bound
from .expmap import frechet_adjoint, mat_exp
from .optim import Method, OptimizerConfig, Schedule, lpg_run
from .policy import AmbientPolicy, ConstantBasisFeatures, GaussianLiePolicy, \
    OrientationScaledFeatures

__all__ = [
    "LipschitzProbeResult",
    "SlopeFit",
    "QuadraticObjective",
    "WitnessObjective",
    "PoseObjective",
    "lipschitz_probe",
    "dichotomy_sweep",
    "convergence_slope",
    "deterministic_quadratic_run",
    "stochastic_rate_sweep",
    "timing_bench",
    "anisotropy_ablation",
    "robustness_sweep",
    "se3_divergence_study",
    "method_comparison",
    "joint_count_sweep",
]

DICHOTOMY_RADII = (0.5, 1.0, 1.5, 2.0, 2.5, 3.0)
EXP_FIT_R2_MIN = 0.98
EXP_FIT_RESIDUAL_FACTOR = 2.0
FLAT_RATIO_MAX = 2.0

THREADS_ENV_VAR = "LIE_DICHOTOMY_THREADS"


def seed_map(fn, seeds):
    """Map fn over seeds, in parallel when LIE_DICHOTOMY_THREADS > 1.

    Results are collected in seed order, so aggregation is deterministic
    regardless of the thread count.
    """
    workers = max(1, int(os.environ.get(THREADS_ENV_VAR, "1")))
    if workers == 1:
        return [fn(s) for s in seeds]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, seeds))


@dataclass
class LipschitzProbeResult:
    radius: float
    sample_pairs: int
    L_emp: float
    L_theory: float
    kind: str


@dataclass
class SlopeFit:
    """Least-squares line through (log x, log y) points."""

    points: list
    slope: float
    intercept: float
    r_squared: float
    dropped: int = 0


def _fit_line(x, y):
    slope, intercept = np.polyfit(x, y, 1)
    pred = slope * x + intercept
    ss_res = float(np.sum((y - pred) ** 2))
    ss_tot = float(np.sum((y - np.mean(y)) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return float(slope), float(intercept), r2, ss_res


class QuadraticObjective:
    """f(theta) = -||theta - theta*||^2 with exact gradient -2(theta - theta*)."""

    def __init__(self, theta_star, descriptor=None, noise_sigma=0.0):
        self.theta_star = np.asarray(theta_star, dtype=float)
        self.descriptor = descriptor
        self.noise_sigma = float(noise_sigma)

    def value(self, theta):
        d = theta - self.theta_star
        return -float(d @ d)

    def exact_gradient(self, theta):
        return -2.0 * (theta - self.theta_star)

    def lipschitz_bound(self, radius):
        return 2.0


class WitnessObjective:
    """Deterministic witness J(theta) = -1/2 ||exp(theta) - I||_F^2 in coordinates."""

    def __init__(self, descriptor):
        self.descriptor = descriptor
        self.noise_sigma = 0.0

    def value(self, theta):
        M = matrix_of(self.descriptor, theta)
        E = mat_exp(M) - np.eye(self.descriptor.n)
        return -0.5 * float(np.sum(E * E))

    def exact_gradient(self, theta):
        M = matrix_of(self.descriptor, theta)
        G = -frechet_adjoint(M, mat_exp(M) - np.eye(self.descriptor.n))
        return np.tensordot(self.descriptor.basis, project(self.descriptor, G),
                            axes=([1, 2], [0, 1]))

    def lipschitz_bound(self, radius):
        # ||grad(t) - grad(t')|| <= (2 n e^{2R} + n e^R) ||t - t'|| <= 3 n e^{2R}
        n = self.descriptor.n
        return 3.0 * n * np.exp(2.0 * radius)


class PoseObjective:
    """Witness-style pose error of a K-step constant-action rollout on se(3):
    f(xi) = -(1/2K) sum_{k<=K} ||exp(k xi) - T*||_F^2.

    The compounding steps expose the translation-driven polynomial growth of
    the gradient Lipschitz constant; se(3) has no hyperbolic elements, so the
    growth stays sub-exponential.
    """

    def __init__(self, target=None, steps=5, seed=0):
        self.descriptor = make_descriptor(AlgebraKind.SE_3, 4)
        self.steps = int(steps)
        if target is None:
            from .expmap import se3_exp

            rng = np.random.default_rng(np.random.SeedSequence(seed))
            axis = rng.normal(size=3)
            axis /= np.linalg.norm(axis)
            target = se3_exp(axis * 1.0, rng.normal(0.0, 1.0, size=3))
        self.target = np.asarray(target, dtype=float)
        self.noise_sigma = 0.0

    def value(self, theta):
        M = matrix_of(self.descriptor, theta)
        total = 0.0
        for k in range(1, self.steps + 1):
            E = mat_exp(k * M) - self.target
            total -= 0.5 * float(np.sum(E * E))
        return total / self.steps

    def exact_gradient(self, theta):
        M = matrix_of(self.descriptor, theta)
        total = np.zeros(self.descriptor.d_g)
        for k in range(1, self.steps + 1):
            E = mat_exp(k * M) - self.target
            G = -(k / self.steps) * frechet_adjoint(k * M, E)
            total += np.tensordot(self.descriptor.basis, project(self.descriptor, G),
                                  axes=([1, 2], [0, 1]))
        return total

    def lipschitz_bound(self, radius):
        # generic bound through the k-scaled chain rule; loose but valid
        n = self.descriptor.n
        K = self.steps
        return 3.0 * n * K**2 * np.exp(2.0 * K * radius)


def _uniform_ball(rng, d, radius, count):
    """count points uniform on the radius ball: sphere direction, r u^{1/d}."""
    x = rng.standard_normal((count, d))
    x /= np.linalg.norm(x, axis=1, keepdims=True)
    r = radius * rng.uniform(0.0, 1.0, size=count) ** (1.0 / d)
    return x * r[:, None]


def lipschitz_probe(objective, descriptor, radius, pairs, seed=0):
    """Empirical gradient Lipschitz constant over the radius ball.

    Draws ``pairs`` uniform pairs (direction uniform on the sphere, radius
    R u^{1/d}) and returns the maximum difference ratio
    ||grad(t) - grad(t')|| / ||t - t'|| over all point pairs among the draws;
    sweeping all cross pairs lets nearby draws probe the local Hessian where
    it is largest.  Gradients are the objective's exact analytic ones.
    """
    if pairs < 2:
        raise ValueError("pairs must be >= 2")
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    d = descriptor.d_g
    X = np.vstack([
        _uniform_ball(rng, d, radius, pairs),
        _uniform_ball(rng, d, radius, pairs),
    ])
    G = np.array([objective.exact_gradient(x) for x in X])
    L = 0.0
    block = 512
    for i in range(0, len(X), block):
        dx = np.linalg.norm(X[i : i + block, None, :] - X[None, :, :], axis=2)
        dg = np.linalg.norm(G[i : i + block, None, :] - G[None, :, :], axis=2)
        mask = dx > 1e-9
        if np.any(mask):
            L = max(L, float(np.max(dg[mask] / dx[mask])))
    return LipschitzProbeResult(
        radius=float(radius),
        sample_pairs=int(pairs),
        L_emp=float(L),
        L_theory=float(objective.lipschitz_bound(radius)),
        kind=descriptor.kind.value,
    )


def classify_growth(radii, L_values):
    """{flat, polynomial, exponential} per the fixed finite-sample rule.

    flat: L(R_max)/L(R_min) <= 2.  exponential: the log L vs R fit has
    r^2 >= 0.98 and its residual beats the log L vs log R fit's by 2x.
    polynomial otherwise.  Returns (label, exp_rate, ratio, r2_exp, r2_poly).
    """
    radii = np.asarray(radii, dtype=float)
    L = np.asarray(L_values, dtype=float)
    ratio = float(L[-1] / L[0]) if L[0] > 0 else np.inf
    logL = np.log(L)
    exp_slope, _, r2_exp, rss_exp = _fit_line(radii, logL)
    _, _, r2_poly, rss_poly = _fit_line(np.log(radii), logL)
    if ratio <= FLAT_RATIO_MAX:
        return "flat", exp_slope, ratio, r2_exp, r2_poly
    if r2_exp >= EXP_FIT_R2_MIN and rss_exp * EXP_FIT_RESIDUAL_FACTOR <= rss_poly:
        return "exponential", exp_slope, ratio, r2_exp, r2_poly
    return "polynomial", exp_slope, ratio, r2_exp, r2_poly


def dichotomy_sweep(radii=DICHOTOMY_RADII, seeds=(0, 1, 2), pairs=400, joints=10):
    """L_emp(R) curves and growth classification for the three algebra rows:
    compact so(3)^J (quadratic objective), se(3) (pose objective), and the
    gl(2) witness."""
    radii = tuple(float(r) for r in radii)
    if len(radii) < 4 or list(radii) != sorted(radii):
        raise ValueError("radii must be >= 4 ascending values")
    so3 = make_descriptor(AlgebraKind.SO3_PRODUCT, 3, joints=joints)
    rows_spec = [
        ("so3_product", so3, QuadraticObjective(np.zeros(so3.d_g), so3)),
        ("se_3", make_descriptor(AlgebraKind.SE_3, 4), PoseObjective(seed=0)),
        ("gl_2", make_descriptor(AlgebraKind.GL_N, 2), None),
    ]
    gl2 = rows_spec[2][1]
    rows_spec[2] = ("gl_2", gl2, WitnessObjective(gl2))
    out = []
    for name, desc, objective in rows_spec:
        curve = []
        for radius in radii:
            vals = [
                lipschitz_probe(objective, desc, radius, pairs, seed=s).L_emp
                for s in seeds
            ]
            curve.append(float(np.mean(vals)))
        label, rate, ratio, r2_exp, r2_poly = classify_growth(radii, curve)
        for radius, L in zip(radii, curve):
            out.append({
                "algebra": name,
                "radius": radius,
                "L_emp": L,
                "L_theory": objective.lipschitz_bound(radius),
                "class": label,
                "exp_rate": rate,
                "ratio": ratio,
                "r2_exp": r2_exp,
                "r2_poly": r2_poly,
            })
    return out


def convergence_slope(trace, burn_in_fraction=0.2, x=None):
    """Least-squares log-log slope of a metric trace after burn-in.

    Non-positive metric values are dropped and counted.  ``x`` defaults to
    the 1-based iteration index.
    """
    y = np.asarray(trace, dtype=float)
    if len(y) < 50:
        raise ValueError("trace must have length >= 50")
    if x is None:
        x = np.arange(1, len(y) + 1, dtype=float)
    else:
        x = np.asarray(x, dtype=float)
    start = int(np.floor(burn_in_fraction * len(y)))
    x, y = x[start:], y[start:]
    keep = y > 0
    dropped = int(np.sum(~keep))
    x, y = x[keep], y[keep]
    pts = list(zip(np.log(x), np.log(y)))
    slope, intercept, r2, _ = _fit_line(np.log(x), np.log(y))
    return SlopeFit(pts, slope, intercept, r2, dropped)


def deterministic_quadratic_run(joints=10, T=2000, eta=0.25, seed=0):
    """Exact-gradient LPG on the quadratic over so(3)^J.

    Returns (record, running_avg_gap, progress_slack): the running average of
    the optimality gap decays as C/t (log-log slope -1), and progress_slack
    is the per-iteration minimum of
    J(theta_{t+1}) - J(theta_t) - (eta/2) ||P grad J||^2 (Lemma lower bound,
    nonnegative up to round-off for eta <= 1/L).
    """
    desc = make_descriptor(AlgebraKind.SO3_PRODUCT, 3, joints=joints)
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    theta0 = rng.standard_normal(desc.d_g)
    theta0 /= np.linalg.norm(theta0)
    objective = QuadraticObjective(np.zeros(desc.d_g), desc)
    cfg = OptimizerConfig(method=Method.LPG, eta=eta, schedule=Schedule.CONSTANT,
                          T=T, seed=seed)
    _, record = lpg_run(objective, theta0, cfg)
    gap = -record.mean_return  # J* = 0
    running_avg = np.cumsum(gap) / np.arange(1, T + 1)
    # progress inequality slack from the recorded trace
    j = record.mean_return
    slack = np.min(j[1:] - j[:-1] - 0.5 * eta * record.grad_norm[:-1] ** 2)
    return record, running_avg, float(slack)


def stochastic_rate_sweep(horizons=(64, 128, 256, 512, 1024, 2048), seeds=(0, 1, 2, 3, 4),
                          d=30, eta=0.25, noise_sigma=1.0):
    """Average squared gradient norm A_T vs horizon T under the eta/sqrt(T)
    schedule; per-seed log-log slopes should sit at -1/2.

    Returns (rows, per-seed slopes).
    """
    desc = make_descriptor(AlgebraKind.SO3_PRODUCT, 3, joints=d // 3)
    rows, slopes = [], []
    for seed in seeds:
        rng = np.random.default_rng(np.random.SeedSequence([seed, 7]))
        theta0 = rng.standard_normal(desc.d_g)
        theta0 /= np.linalg.norm(theta0)
        A_values = []
        for T in horizons:
            objective = QuadraticObjective(np.zeros(desc.d_g), desc,
                                           noise_sigma=noise_sigma)
            cfg = OptimizerConfig(method=Method.LPG, eta=eta,
                                  schedule=Schedule.CONSTANT_OVER_SQRT_T,
                                  T=int(T), seed=seed)
            _, record = lpg_run(objective, theta0, cfg)
            A_T = float(np.mean(record.grad_norm**2))
            A_values.append(A_T)
            rows.append({"seed": seed, "T": int(T), "avg_sq_grad_norm": A_T})
        slope, _, _, _ = _fit_line(np.log(np.asarray(horizons, dtype=float)),
                                   np.log(np.asarray(A_values)))
        slopes.append(slope)
    return rows, slopes


def timing_bench(J_values=(10, 30, 50, 100, 200), trials=200, seed=0):
    """Median/mean microseconds for the SPD factorization solve (d_g = 3J) and
    the blockwise skew-symmetrization of J blocks, with fitted exponents.

    Returns (rows, factorization exponent, projection exponent).  Absolute
    times are hardware-dependent; only exponents and orderings are contracts.
    """
    if trials < 50:
        raise ValueError("trials must be >= 50")
    from ._kernels import blockwise_skew_reps, chol_solve_reps

    rng = np.random.default_rng(np.random.SeedSequence(seed))
    rows = []
    med_f, med_p = [], []
    for J in J_values:
        d = 3 * J
        A = rng.standard_normal((d, d))
        F = A @ A.T + d * np.eye(d)
        g = rng.standard_normal(d)
        blocks = rng.standard_normal((J, 3, 3))
        reps_f = max(1, int(3e6 / d**2))
        reps_p = max(10, int(2e5 / J))
        # warm-up (includes JIT compilation on first call)
        for _ in range(10):
            chol_solve_reps(F, g, 1)
            blockwise_skew_reps(blocks, 1)
        tf, tp = [], []
        for _ in range(trials):
            t0 = time.perf_counter()
            chol_solve_reps(F, g, reps_f)
            tf.append((time.perf_counter() - t0) / reps_f)
            t0 = time.perf_counter()
            blockwise_skew_reps(blocks, reps_p)
            tp.append((time.perf_counter() - t0) / reps_p)
        tf = np.asarray(tf) * 1e6
        tp = np.asarray(tp) * 1e6
        f_med, p_med = float(np.median(tf)), float(np.median(tp))
        med_f.append(f_med)
        med_p.append(p_med)
        rows.append({
            "J": int(J),
            "d_g": d,
            "factorization_median_micros": f_med,
            "factorization_mean_micros": float(np.mean(tf)),
            "projection_median_micros": p_med,
            "projection_mean_micros": float(np.mean(tp)),
            "speedup": f_med / p_med,
        })
    logJ = np.log(np.asarray(J_values, dtype=float))
    exp_f, _, _, _ = _fit_line(logJ, np.log(np.asarray(med_f)))
    exp_p, _, _, _ = _fit_line(logJ, np.log(np.asarray(med_p)))
    return rows, exp_f, exp_p


def _training_setup(joints, seed, perturbation, sigma, features, feature_beta,
                    horizon=20, reward_clip=1e3):
    env = So3TrackingEnv(joints, seed=seed, perturbation=perturbation,
                         horizon=horizon, reward_clip=reward_clip)
    desc = env.descriptor
    if features == "orientation_scaled":
        fmap = OrientationScaledFeatures(desc, beta=feature_beta)
    else:
        fmap = ConstantBasisFeatures(desc)
    rng = np.random.default_rng(np.random.SeedSequence([seed, 11]))
    theta0 = rng.standard_normal(desc.d_g)
    theta0 /= np.linalg.norm(theta0)
    policy = GaussianLiePolicy(desc, theta0, fmap, sigma)
    return env, policy, theta0


def _aggregate_training(env_seeds, make_run):
    """Run per seed and average the tracked diagnostics."""
    records = seed_map(make_run, env_seeds)
    final_returns, aligns, kappas, eps = [], [], [], []
    for record in records:
        final_returns.append(record.mean_return[-1])
        aligns.append(np.nanmean(record.alignment))
        kappas.append(np.nanmean(record.kappa))
        eps.append(np.nanmean(record.epsilon_F))
    return {
        "final_return_mean": float(np.mean(final_returns)),
        "final_return_std": float(np.std(final_returns)),
        "alignment": float(np.mean(aligns)),
        "kappa": float(np.mean(kappas)),
        "epsilon_F": float(np.mean(eps)),
    }


def anisotropy_ablation(kappa_m_values=(1.0, 5.0, 10.0), seeds=(0, 1, 2, 3, 4),
                        joints=10, T=40, eta=0.25, sigma=0.1,
                        include_axis_biased=True, feature_beta=0.5):
    """Alignment/conditioning under controlled exploration anisotropy."""
    conditions = []
    for km in kappa_m_values:
        if km <= 1.0:
            conditions.append(("uniform", PerturbationConfig()))
        else:
            conditions.append((
                f"correlated_{km:g}",
                PerturbationConfig(anisotropy=AnisotropyMode.CORRELATED, kappa_m=km),
            ))
    if include_axis_biased:
        conditions.insert(1, ("axis_biased",
                              PerturbationConfig(anisotropy=AnisotropyMode.AXIS_BIASED)))
    rows = []
    for name, pert in conditions:
        def run(seed, pert=pert):
            env, policy, _ = _training_setup(joints, seed, pert, sigma,
                                             "orientation_scaled", feature_beta)
            cfg = OptimizerConfig(method=Method.LPG, eta=eta, T=T,
                                  schedule=Schedule.CONSTANT, B_theta=10.0, seed=seed)
            _, record = lpg_run(env, policy, cfg)
            return record
        agg = _aggregate_training(seeds, run)
        agg["condition"] = name
        agg["kantorovich_bound"] = kantorovich_bound(agg["kappa"])
        rows.append(agg)
    return rows


def robustness_conditions(sigma_eps_values=(0.01, 0.05, 0.1), sigma_obs=0.05,
                          sigma_r=0.1):
    conditions = [("baseline", PerturbationConfig())]
    for s in sigma_eps_values:
        conditions.append((f"transition_{s:g}",
                           PerturbationConfig(transition_noise_sigma=s)))
    conditions.append((f"observation_{sigma_obs:g}",
                       PerturbationConfig(observation_noise_sigma=sigma_obs)))
    conditions.append((f"reward_{sigma_r:g}",
                       PerturbationConfig(reward_noise_sigma=sigma_r)))
    return conditions


def robustness_sweep(seeds=(0, 1, 2, 3, 4), joints=10, T=40, eta=0.25, sigma=0.1,
                     feature_beta=0.5, sigma_eps_values=(0.01, 0.05, 0.1)):
    """Equivariance-breaking perturbations: final return, alignment, kappa."""
    rows = []
    for name, pert in robustness_conditions(sigma_eps_values):
        def run(seed, pert=pert):
            env, policy, _ = _training_setup(joints, seed, pert, sigma,
                                             "orientation_scaled", feature_beta)
            cfg = OptimizerConfig(method=Method.LPG, eta=eta, T=T,
                                  schedule=Schedule.CONSTANT, B_theta=10.0, seed=seed)
            _, record = lpg_run(env, policy, cfg)
            return record
        agg = _aggregate_training(seeds, run)
        agg["condition"] = name
        agg["kantorovich_bound"] = kantorovich_bound(agg["kappa"])
        rows.append(agg)
    return rows


def se3_divergence_study(B_values=(np.inf, 2.0), T=200, seeds=(0, 1, 2, 3, 4),
                         eta=0.25, sigma=0.05):
    """Parameter-norm trajectories with and without radius projection.

    Reward clipping is configured inactive here so the quadratic growth of the
    pose error is felt unclipped.  Reports per-seed max/final ||theta||_F and
    the implied Lipschitz growth ratio (max ||theta|| / 1)^2.
    """
    rows = []
    for B in B_values:
        def run(seed, B=B):
            env = Se3Env(seed=seed, reward_clip=1e6)
            desc = env.descriptor
            rng = np.random.default_rng(np.random.SeedSequence([seed, 11]))
            theta0 = rng.standard_normal(desc.d_g)
            theta0 /= np.linalg.norm(theta0)
            policy = GaussianLiePolicy(desc, theta0, ConstantBasisFeatures(desc), sigma)
            cfg = OptimizerConfig(method=Method.LPG, eta=eta, T=T,
                                  schedule=Schedule.CONSTANT, B_theta=float(B),
                                  seed=seed)
            _, record = lpg_run(env, policy, cfg)
            return record
        for seed, record in zip(seeds, seed_map(run, seeds)):
            max_norm = float(np.max(record.theta_norm))
            rows.append({
                "B_theta": float(B),
                "seed": int(seed),
                "max_theta_norm": max_norm,
                "final_theta_norm": float(record.theta_norm[-1]),
                "implied_L_growth": max_norm**2,
                "trigger_rate": float(np.mean(record.projection_triggered)),
            })
    return rows


def method_comparison(T=200, seeds=(0, 1, 2, 3, 4), joints=10, eta=0.25, sigma=0.1,
                      ambient_factor=3, cg_iters=10, feature_beta=0.5):
    """LPG vs ambient PG vs CG natural gradient on shared seeds.

    Pairing contract: per seed, all methods share the environment seed, the
    action-noise stream seed, and the initial mean action.
    """
    def run_seed(seed):
        out = {}
        env, policy, theta0 = _training_setup(joints, seed, PerturbationConfig(),
                                              sigma, "orientation_scaled",
                                              feature_beta)
        base = dict(eta=eta, T=T, schedule=Schedule.CONSTANT, B_theta=10.0,
                    seed=seed, cg_iters=cg_iters)

        cfg = OptimizerConfig(method=Method.LPG, **base)
        _, rec = lpg_run(env, policy, cfg)
        out["lpg"] = rec

        env, policy, _ = _training_setup(joints, seed, PerturbationConfig(), sigma,
                                         "orientation_scaled", feature_beta)
        ambient = AmbientPolicy.create(env.descriptor.d_g, ambient_factor, sigma,
                                       seed=seed, initial_mean=theta0)
        cfg = OptimizerConfig(method=Method.AMBIENT_PG, **base)
        _, rec = lpg_run(env, ambient, cfg)
        out["ambient_pg"] = rec

        env, policy, _ = _training_setup(joints, seed, PerturbationConfig(), sigma,
                                         "orientation_scaled", feature_beta)
        cfg = OptimizerConfig(method=Method.NATGRAD_CG, **base)
        _, rec = lpg_run(env, policy, cfg)
        out["natgrad_cg"] = rec
        return out

    per_method = {m: [] for m in ("lpg", "ambient_pg", "natgrad_cg")}
    precond = {m: [] for m in per_method}
    for result in seed_map(run_seed, seeds):
        for m, rec in result.items():
            per_method[m].append(rec.mean_return[-1])
            precond[m].append(float(np.median(rec.wall_micros["precondition"])))
    rows = []
    for m in per_method:
        rows.append({
            "method": m,
            "final_return_mean": float(np.mean(per_method[m])),
            "final_return_std": float(np.std(per_method[m])),
            "precondition_micros": float(np.median(precond[m])),
        })
    return rows


def joint_count_sweep(J_values=(5, 10, 15, 20, 30), seeds=(0, 1, 2), T=40, eta=0.25,
                      sigma=0.1, feature_beta=0.5):
    """Alignment/conditioning and kernel-timing speedup across joint counts."""
    from ._kernels import blockwise_skew_reps, chol_solve_reps

    rng = np.random.default_rng(np.random.SeedSequence(123))
    rows = []
    for J in J_values:
        def run(seed, J=J):
            env, policy, _ = _training_setup(J, seed, PerturbationConfig(), sigma,
                                             "orientation_scaled", feature_beta)
            cfg = OptimizerConfig(method=Method.LPG, eta=eta, T=T,
                                  schedule=Schedule.CONSTANT, B_theta=10.0, seed=seed)
            _, record = lpg_run(env, policy, cfg)
            return record
        agg = _aggregate_training(seeds, run)
        d = 3 * J
        A = rng.standard_normal((d, d))
        F = A @ A.T + d * np.eye(d)
        g = rng.standard_normal(d)
        blocks = rng.standard_normal((J, 3, 3))
        chol_solve_reps(F, g, 1)
        blockwise_skew_reps(blocks, 1)
        reps = max(5, int(1e6 / d**2))
        t0 = time.perf_counter()
        chol_solve_reps(F, g, reps)
        tf = (time.perf_counter() - t0) / reps * 1e6
        t0 = time.perf_counter()
        blockwise_skew_reps(blocks, max(100, reps))
        tp = (time.perf_counter() - t0) / max(100, reps) * 1e6
        agg.update({"J": int(J), "d_g": d, "speedup": tf / tp,
                    "kantorovich_bound": kantorovich_bound(agg["kappa"])})
        rows.append(agg)
    return rows
