"""One-shot property suite behind the `validate` CLI subcommand.

Each check is a fast, seeded version of a module invariant; `run_all` prints
one PASS/FAIL line per check and reports overall success.
"""

from __future__ import annotations

import numpy as np

from .algebra import (
    AlgebraElement,
    AlgebraKind,
    coords_of,
    hyperbolic_witness,
    make_descriptor,
    matrix_of,
    project,
)
from .envs import (
    PerturbationConfig,
    So3TrackingEnv,
    geodesic_reward,
    witness_g2,
    witness_objective,
)
from .estimation import alignment, estimate_fisher, kantorovich_bound
from .expmap import frechet_adjoint, mat_exp, mat_exp_frechet, so3_exp, so3_log
from .experiments import QuadraticObjective, deterministic_quadratic_run
from .optim import (
    Method,
    OptimizerConfig,
    Schedule,
    collect_trajectories,
    radius_project,
    step_size,
)
from .policy import ConstantBasisFeatures, GaussianLiePolicy

CHECK_KINDS = (
    (AlgebraKind.SO_N, 3, None),
    (AlgebraKind.SO_N, 4, None),
    (AlgebraKind.SL_N, 2, None),
    (AlgebraKind.SL_N, 3, None),
    (AlgebraKind.GL_N, 3, None),
    (AlgebraKind.DIAG_N, 4, None),
    (AlgebraKind.SE_3, 4, None),
    (AlgebraKind.SO3_PRODUCT, 3, 3),
)


def _descriptors():
    return [make_descriptor(k, n, joints=j) for k, n, j in CHECK_KINDS]


def check_projector_properties(samples=100, tol=1e-10):
    rng = np.random.default_rng(0)
    worst = 0.0
    for desc in _descriptors():
        n = desc.n
        for _ in range(samples):
            M = rng.standard_normal((n, n))
            N = rng.standard_normal((n, n))
            a, b = rng.standard_normal(2)
            PM, PN = project(desc, M), project(desc, N)
            worst = max(worst, np.linalg.norm(project(desc, a * M + b * N) - a * PM - b * PN))
            worst = max(worst, np.linalg.norm(project(desc, PM) - PM))
            if np.linalg.norm(PM) > np.linalg.norm(M) + tol:
                return False, f"expansive projection on {desc.kind.value}"
            worst = max(worst, abs(np.sum(PM * N) - np.sum(M * PN)))
            worst = max(worst, abs(np.sum(M * PM) - np.sum(PM * PM)))
            basis_proj = np.tensordot(
                np.tensordot(desc.basis, M, axes=([1, 2], [0, 1])), desc.basis, axes=(0, 0)
            )
            worst = max(worst, np.linalg.norm(PM - basis_proj))
    return worst <= tol, f"max deviation {worst:.2e}"


def check_isometry(tol=1e-12):
    rng = np.random.default_rng(1)
    worst = 0.0
    for desc in _descriptors():
        for _ in range(20):
            x = rng.standard_normal(desc.d_g)
            M = matrix_of(desc, x)
            worst = max(worst, abs(np.linalg.norm(M) - np.linalg.norm(x)))
            worst = max(worst, np.linalg.norm(coords_of(desc, M) - x))
    return worst <= tol, f"max deviation {worst:.2e}"


def check_exp_structure(tol=1e-8):
    rng = np.random.default_rng(2)
    for _ in range(20):
        desc = make_descriptor(AlgebraKind.SO_N, 4)
        K = matrix_of(desc, rng.standard_normal(desc.d_g))
        R = mat_exp(K)
        if np.linalg.norm(R.T @ R - np.eye(4)) > 1e-10 or abs(np.linalg.det(R) - 1) > 1e-10:
            return False, "exp of skew not special orthogonal"
        sl = make_descriptor(AlgebraKind.SL_N, 3)
        A = matrix_of(sl, rng.standard_normal(sl.d_g) * 0.5)
        if abs(np.linalg.det(mat_exp(A)) - 1.0) > tol:
            return False, "exp of traceless not unimodular"
    return True, "orthogonality and unimodularity hold"


def check_compact_lipschitz(pairs=50):
    rng = np.random.default_rng(3)
    desc = make_descriptor(AlgebraKind.SO_N, 4)
    sqn = np.sqrt(desc.n)
    for R in (1.0, 3.0, 5.0):
        for _ in range(pairs):
            x = rng.standard_normal(desc.d_g)
            y = rng.standard_normal(desc.d_g)
            x *= R * rng.uniform() ** (1 / desc.d_g) / np.linalg.norm(x)
            y *= R * rng.uniform() ** (1 / desc.d_g) / np.linalg.norm(y)
            lhs = np.linalg.norm(mat_exp(matrix_of(desc, x)) - mat_exp(matrix_of(desc, y)))
            if lhs > sqn * np.linalg.norm(x - y) + 1e-10:
                return False, f"compact bound violated at R={R}"
    return True, "||exp x - exp y|| <= sqrt(n)||x - y|| on so(4), R in {1,3,5}"


def check_frechet(tol=1e-6):
    rng = np.random.default_rng(4)
    worst = 0.0
    for _ in range(10):
        n = int(rng.integers(2, 5))
        A = rng.standard_normal((n, n))
        A *= rng.uniform(0, 3) / max(np.linalg.norm(A), 1e-12)
        H = rng.standard_normal((n, n))
        _, D = mat_exp_frechet(A, H)
        h = 1e-6 * max(1.0, np.linalg.norm(A))
        fd = (mat_exp(A + h * H) - mat_exp(A - h * H)) / (2 * h)
        worst = max(worst, np.linalg.norm(D - fd) / max(np.linalg.norm(fd), 1e-300))
    return worst <= tol, f"max relative FD error {worst:.2e}"


def check_adjoint(tol=1e-8):
    rng = np.random.default_rng(5)
    worst = 0.0
    for _ in range(10):
        n = int(rng.integers(2, 5))
        A = rng.standard_normal((n, n))
        A *= rng.uniform(0, 2) / max(np.linalg.norm(A), 1e-12)
        H = rng.standard_normal((n, n))
        W = rng.standard_normal((n, n))
        _, D = mat_exp_frechet(A, H)
        lhs = np.sum(D * W)
        rhs = np.sum(H * frechet_adjoint(A, W))
        worst = max(worst, abs(lhs - rhs) / max(abs(lhs), 1e-300))
    return worst <= tol, f"max relative adjoint gap {worst:.2e}"


def check_so3_log(tol=1e-8):
    rng = np.random.default_rng(6)
    for _ in range(30):
        w = rng.standard_normal(3)
        w *= rng.uniform(0, 3.0) / np.linalg.norm(w)
        R = so3_exp(w)
        if np.linalg.norm(mat_exp(so3_log(R)) - R) > tol:
            return False, "log/exp roundtrip failed"
    return True, "exp(log R) = R for angles up to 3"


def check_witness(tol=1e-3):
    desc = make_descriptor(AlgebraKind.DIAG_N, 3)
    H = hyperbolic_witness(AlgebraKind.DIAG_N, 3)
    h = 1e-3
    for t in (0.0, 1.0, 2.0):
        def J(u):
            return witness_objective(AlgebraElement(desc, u * H.coords), 0.0)
        fd = (J(t + h) - 2 * J(t) + J(t - h)) / h**2
        closed = witness_g2(t, 0.0)
        if abs(fd - closed) / abs(closed) > tol:
            return False, f"second difference mismatch at t={t}"
    for R in (0.0, 0.5, 1.0, 2.0):
        for s in (0.0, 0.1):
            if abs(witness_g2(R, s)) < np.exp(2 * R) - 1e-9:
                return False, f"|g''| >= e^2R violated at R={R}, sigma={s}"
    return True, "analytic g'' matches second differences; lower bound holds"


def check_kantorovich(trials=1000, tol=1e-10):
    rng = np.random.default_rng(7)
    for _ in range(trials):
        d = int(rng.integers(2, 10))
        A = rng.standard_normal((d, d))
        F = A @ A.T + 1e-3 * np.eye(d)
        g = rng.standard_normal(d)
        eig = np.linalg.eigvalsh(F)
        bound = kantorovich_bound(eig[-1] / eig[0])
        if alignment(g, F) < bound - tol:
            return False, "alignment fell below the Kantorovich bound"
    # tight case
    F = np.diag([1.0, 4.0])
    g = np.array([1.0, 2.0])  # (sqrt(lam_min), sqrt(lam_max))
    if abs(alignment(g, F) - kantorovich_bound(4.0)) > tol:
        return False, "constructed tight case missed equality"
    return True, f"{trials} random trials >= bound; tight case exact"


def check_fisher_isotropy(samples=50000, tol=0.05):
    desc = make_descriptor(AlgebraKind.SO3_PRODUCT, 3, joints=10)
    policy = GaussianLiePolicy(desc, np.zeros(desc.d_g),
                               ConstantBasisFeatures(desc), 0.1)
    rng = np.random.default_rng(8)
    state = None
    pairs = []
    for _ in range(samples):
        a, _ = policy.sample_coords(state, rng)
        pairs.append((state, a))
    est = estimate_fisher(policy, pairs)
    target = 100.0 * np.eye(desc.d_g)
    rel = np.linalg.norm(est.matrix - target) / np.linalg.norm(target)
    return rel <= tol, f"||F - 100 I||/||100 I|| = {rel:.4f}"


def check_equivariance(tol=1e-10):
    rng = np.random.default_rng(9)
    env = So3TrackingEnv(4, seed=0)
    env.reset()
    rot = [so3_exp(rng.standard_normal(3)) for _ in range(4)]
    R = np.array([r @ np.eye(3) for r in rot])
    base = geodesic_reward(R, env.targets)
    g = so3_exp(rng.standard_normal(3))
    moved = geodesic_reward(np.array([g @ r for r in R]),
                            np.array([g @ t for t in env.targets]))
    return abs(base - moved) <= tol, f"reward shift {abs(base - moved):.2e}"


def check_determinism():
    def trace():
        env = So3TrackingEnv(3, seed=5)
        desc = env.descriptor
        policy = GaussianLiePolicy(desc, np.zeros(desc.d_g),
                                   ConstantBasisFeatures(desc), 0.1)
        rng = np.random.default_rng(np.random.SeedSequence(5))
        trajs = collect_trajectories(env, policy, 3, rng)
        return np.concatenate([t.rewards for t in trajs])
    a, b = trace(), trace()
    same = np.array_equal(a, b)
    return same, "same seed reproduces the trajectory bit-for-bit" if same \
        else "replay diverged"


def check_schedules(tol=1e-12):
    if abs(step_size(Schedule.CONSTANT_OVER_SQRT_T, 1.0, 5, 100) - 0.1) > tol:
        return False, "eta/sqrt(T) schedule wrong"
    if abs(step_size(Schedule.CONSTANT_OVER_SQRT_T, 1.0, 0, 1) - 1.0) > tol:
        return False, "T=1 schedule wrong"
    th, trig = radius_project(np.array([3.0, 4.0]), 1.0)
    if not trig or np.linalg.norm(th - np.array([0.6, 0.8])) > tol:
        return False, "radius projection wrong"
    return True, "step sizes and radius projection match contracts"


def check_progress_inequality(T=200):
    _, _, slack = deterministic_quadratic_run(joints=10, T=T, eta=0.25, seed=0)
    return slack >= -1e-12, f"min progress slack {slack:.2e}"


ALL_CHECKS = (
    ("projector_properties", check_projector_properties),
    ("coordinate_isometry", check_isometry),
    ("exp_group_structure", check_exp_structure),
    ("compact_exp_lipschitz", check_compact_lipschitz),
    ("frechet_finite_differences", check_frechet),
    ("frechet_adjoint_identity", check_adjoint),
    ("so3_log_roundtrip", check_so3_log),
    ("witness_derivatives", check_witness),
    ("kantorovich_bound", check_kantorovich),
    ("fisher_isotropy", check_fisher_isotropy),
    ("reward_equivariance", check_equivariance),
    ("seeded_determinism", check_determinism),
    ("schedules_and_projection", check_schedules),
    ("progress_inequality", check_progress_inequality),
)


def run_all(out=print):
    ok_all = True
    for name, fn in ALL_CHECKS:
        try:
            ok, detail = fn()
        except Exception as exc:  # a crashed check is a failed check
            ok, detail = False, f"raised {type(exc).__name__}: {exc}"
        ok_all &= ok
        out(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
    return ok_all
