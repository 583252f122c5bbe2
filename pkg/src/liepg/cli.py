"""Command-line entry point: experiment selection, config files, deterministic
seeding, CSV output, and the one-shot validation suite.

Config files are YAML; unknown fields warn (forward compatibility) while
invalid values are reported all at once.  Every experiment writes
``<output_dir>/<experiment>/<tag>/`` with results.csv, config.snapshot and
meta.txt; CSV numeric columns carry 17 significant digits so re-reading is
bit-identical.
"""

from __future__ import annotations

import argparse
import copy
import hashlib
import json
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from . import __version__, experiments, validate as validate_mod
from .algebra import AlgebraKind
from .envs import AnisotropyMode, PerturbationConfig, Se3Env, So3TrackingEnv
from .expmap import SmoothnessParams
from .optim import Method, OptimizerConfig, Schedule, lpg_run
from .policy import (
    AmbientPolicy,
    ConstantBasisFeatures,
    GaussianLiePolicy,
    OrientationScaledFeatures,
)

__all__ = ["main", "load_config", "emit_csv", "read_csv", "ConfigError", "RunConfig"]

EXPERIMENTS = ("train", "dichotomy", "bench", "ablate", "se3", "witness")


class ConfigError(Exception):
    """Carries every violation found while validating a config."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


def _positive(v):
    return None if v > 0 else "must be strictly positive"


def _nonnegative(v):
    return None if v >= 0 else "must be nonnegative"


def _ge1(v):
    return None if v >= 1 else "must be >= 1"


def _unit_interval(v):
    return None if 0 <= v < 1 else "must lie in [0, 1)"


def _enum(values):
    def check(v):
        return None if v in values else f"must be one of {sorted(values)}"
    return check


DEFAULT_CONFIG = {
    "experiment": None,
    "output_dir": "out",
    "tag": None,
    "seeds": [0, 1, 2, 3, 4],
    "algebra": {"kind": "so3_product", "n": 3, "J": 10},
    "optimizer": {
        "method": "lpg",
        "eta": 0.25,
        "schedule": "constant",
        "B_theta": 10.0,
        "T": 40,
        "episodes_per_iter": 8,
        "gamma": 0.99,
        "cg_iters": 10,
    },
    "policy": {
        "sigma": 0.1,
        "clip_multiplier": 3.0,
        "features": "orientation_scaled",
        "feature_beta": 0.5,
        "ambient_factor": 3,
    },
    "perturbation": {
        "transition_noise_sigma": 0.0,
        "observation_noise_sigma": 0.0,
        "reward_noise_sigma": 0.0,
        "anisotropy": "uniform",
        "kappa_m": 1.0,
    },
    "smoothness": {
        "R_max": 1000.0,
        "B_Phi": 1.0,
        "B_a": 0.3,
        "C_d": 1.0,
        "gamma": 0.99,
        "sigma": 0.1,
        "R0": 2.0,
    },
    "experiment_params": {},
}

_SCHEMA = {
    "experiment": (str, _enum(set(EXPERIMENTS) | {"validate"})),
    "output_dir": (str, None),
    "tag": (str, None),
    "seeds": (list, None),
    "algebra": {
        "kind": (str, _enum({k.value for k in AlgebraKind})),
        "n": (int, _ge1),
        "J": (int, _ge1),
    },
    "optimizer": {
        "method": (str, _enum({m.value for m in Method})),
        "eta": ((int, float), _positive),
        "schedule": (str, _enum({s.value for s in Schedule})),
        "B_theta": ((int, float), _positive),
        "T": (int, _ge1),
        "episodes_per_iter": (int, _ge1),
        "gamma": ((int, float), _unit_interval),
        "cg_iters": (int, _ge1),
    },
    "policy": {
        "sigma": ((int, float), _positive),
        "clip_multiplier": ((int, float), _positive),
        "features": (str, _enum({"constant", "orientation_scaled"})),
        "feature_beta": ((int, float), _nonnegative),
        "ambient_factor": (int, _ge1),
    },
    "perturbation": {
        "transition_noise_sigma": ((int, float), _nonnegative),
        "observation_noise_sigma": ((int, float), _nonnegative),
        "reward_noise_sigma": ((int, float), _nonnegative),
        "anisotropy": (str, _enum({m.value for m in AnisotropyMode})),
        "kappa_m": ((int, float), lambda v: None if v >= 1 else "must be >= 1"),
    },
    "smoothness": {
        "R_max": ((int, float), _positive),
        "B_Phi": ((int, float), _positive),
        "B_a": ((int, float), _positive),
        "C_d": ((int, float), _positive),
        "gamma": ((int, float), _unit_interval),
        "sigma": ((int, float), _positive),
        "R0": ((int, float), _nonnegative),
    },
    "experiment_params": None,  # free-form, experiment-specific
}


@dataclass
class RunConfig:
    experiment: str
    output_dir: str
    tag: str
    seeds: list
    algebra: dict
    optimizer: dict
    policy: dict
    perturbation: dict
    smoothness: dict
    experiment_params: dict
    resolved: dict = field(repr=False, default=None)

    def perturbation_config(self):
        p = self.perturbation
        return PerturbationConfig(
            transition_noise_sigma=p["transition_noise_sigma"],
            observation_noise_sigma=p["observation_noise_sigma"],
            reward_noise_sigma=p["reward_noise_sigma"],
            anisotropy=AnisotropyMode(p["anisotropy"]),
            kappa_m=p["kappa_m"],
        )

    def smoothness_params(self, compact, n):
        s = self.smoothness
        return SmoothnessParams(
            R_max=s["R_max"], B_Phi=s["B_Phi"], B_a=s["B_a"], C_d=s["C_d"],
            gamma=s["gamma"], sigma=s["sigma"], R0=s["R0"], n=n, compact=compact,
        )


def _validate_section(section_name, schema, data, violations, warn):
    for key, value in data.items():
        if key not in schema:
            warn(f"unknown field {section_name}{key} (ignored)")
            continue
        expected, checker = schema[key]
        if value is None:
            continue
        if expected is int and isinstance(value, bool):
            violations.append(f"{section_name}{key}: must be an integer")
            continue
        if expected is int and isinstance(value, float) and value.is_integer():
            value = int(value)
            data[key] = value
        if not isinstance(value, expected):
            violations.append(
                f"{section_name}{key}: expected {getattr(expected, '__name__', expected)}, "
                f"got {type(value).__name__}"
            )
            continue
        if checker is not None:
            msg = checker(value)
            if msg:
                violations.append(f"{section_name}{key}: {msg}")


def validate_config(data, warn=None):
    """Validate a raw config dict against the schema, reporting every violation."""
    if warn is None:
        warn = lambda msg: print(f"warning: {msg}", file=sys.stderr)
    violations = []
    merged = copy.deepcopy(DEFAULT_CONFIG)
    for key, value in data.items():
        if key not in _SCHEMA:
            warn(f"unknown field {key} (ignored)")
            continue
        schema = _SCHEMA[key]
        if isinstance(schema, dict):
            if not isinstance(value, dict):
                violations.append(f"{key}: expected a mapping")
                continue
            value = dict(value)
            _validate_section(f"{key}.", schema, value, violations, warn)
            merged[key].update(
                {k: v for k, v in value.items() if k in schema}
            )
        elif schema is None:
            if not isinstance(value, dict):
                violations.append(f"{key}: expected a mapping")
            else:
                merged[key] = dict(value)
        else:
            expected, checker = schema
            if value is not None and not isinstance(value, expected):
                violations.append(
                    f"{key}: expected {getattr(expected, '__name__', expected)}, "
                    f"got {type(value).__name__}"
                )
                continue
            if value is not None and checker is not None:
                msg = checker(value)
                if msg:
                    violations.append(f"{key}: {msg}")
                    continue
            merged[key] = value
    seeds = merged["seeds"]
    if not isinstance(seeds, list) or len(seeds) == 0:
        violations.append("seeds: must be a nonempty list")
    elif not all(isinstance(s, int) and not isinstance(s, bool) for s in seeds):
        violations.append("seeds: entries must be integers")
    elif len(set(seeds)) != len(seeds):
        violations.append("seeds: entries must be distinct")
    if merged["algebra"]["kind"] == "so3_product" and merged["algebra"].get("J") is None:
        violations.append("algebra.J: required for so3_product")
    if violations:
        raise ConfigError(violations)
    return merged


def load_config(path, warn=None):
    """Parse and validate a YAML config file into a RunConfig."""
    with open(path) as f:
        data = yaml.safe_load(f) or {}
    if not isinstance(data, dict):
        raise ConfigError([f"{path}: top level must be a mapping"])
    merged = validate_config(data, warn)
    return RunConfig(
        experiment=merged["experiment"],
        output_dir=merged["output_dir"],
        tag=merged["tag"],
        seeds=list(merged["seeds"]),
        algebra=merged["algebra"],
        optimizer=merged["optimizer"],
        policy=merged["policy"],
        perturbation=merged["perturbation"],
        smoothness=merged["smoothness"],
        experiment_params=merged["experiment_params"],
        resolved=merged,
    )


def _format_cell(v):
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def emit_csv(rows, path, comment=None):
    """Write rows with a fixed header, '.' decimals, 17-digit floats, LF endings."""
    columns = []
    for row in rows:
        for key in row:
            if key not in columns:
                columns.append(key)
    with open(path, "w", newline="") as f:
        if comment:
            f.write(f"# {comment}\n")
        f.write(",".join(columns) + "\n")
        for row in rows:
            f.write(",".join(_format_cell(row.get(c)) for c in columns) + "\n")


def read_csv(path):
    """Re-read an emitted CSV; floats parsed back bit-identically."""
    with open(path) as f:
        lines = [ln.rstrip("\n") for ln in f if not ln.startswith("#")]
    header = lines[0].split(",")
    rows = []
    for ln in lines[1:]:
        if not ln:
            continue
        row = {}
        for key, cell in zip(header, ln.split(",")):
            if cell == "":
                row[key] = None
                continue
            try:
                row[key] = int(cell)
            except ValueError:
                try:
                    row[key] = float(cell)
                except ValueError:
                    row[key] = cell
        rows.append(row)
    return rows


def _config_hash(resolved):
    blob = json.dumps(resolved, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def _write_outputs(cfg, experiment, rows, argv):
    tag = cfg.tag or time.strftime("%Y%m%dT%H%M%SZ", time.gmtime())
    out_dir = Path(cfg.output_dir) / experiment / tag
    out_dir.mkdir(parents=True, exist_ok=True)
    comment = (f"config_hash={_config_hash(cfg.resolved)} "
               f"seeds={','.join(str(s) for s in cfg.seeds)}")
    emit_csv(rows, out_dir / "results.csv", comment)
    with open(out_dir / "config.snapshot", "w") as f:
        yaml.safe_dump(cfg.resolved, f, sort_keys=True)
    with open(out_dir / "meta.txt", "w") as f:
        f.write(f"liepg {__version__}\n")
        f.write(f"command: {' '.join(argv)}\n")
        f.write(f"written: {time.strftime('%Y-%m-%dT%H:%M:%SZ', time.gmtime())}\n")
    print(f"wrote {out_dir / 'results.csv'}")
    return out_dir


def _parse_float_list(text):
    return [float(x) for x in str(text).split(",") if x != ""]


def _parse_int_list(text):
    return [int(x) for x in str(text).split(",") if x != ""]


def _resolve_config(args, expected_experiment):
    if getattr(args, "config", None):
        cfg = load_config(args.config)
        if cfg.experiment is not None and cfg.experiment != expected_experiment:
            raise ConfigError(
                [f"experiment: config says '{cfg.experiment}' but the "
                 f"'{expected_experiment}' subcommand was invoked"]
            )
    else:
        merged = validate_config({})
        cfg = RunConfig(
            experiment=expected_experiment,
            output_dir=merged["output_dir"],
            tag=merged["tag"],
            seeds=list(merged["seeds"]),
            algebra=merged["algebra"],
            optimizer=merged["optimizer"],
            policy=merged["policy"],
            perturbation=merged["perturbation"],
            smoothness=merged["smoothness"],
            experiment_params=merged["experiment_params"],
            resolved=merged,
        )
    if getattr(args, "seed", None):
        cfg.seeds = _parse_int_list(args.seed)
        if len(set(cfg.seeds)) != len(cfg.seeds) or not cfg.seeds:
            raise ConfigError(["seeds: entries must be nonempty and distinct"])
    if getattr(args, "out", None):
        cfg.output_dir = args.out
    if getattr(args, "tag", None):
        cfg.tag = args.tag
    cfg.resolved["experiment"] = expected_experiment
    cfg.resolved["seeds"] = list(cfg.seeds)
    cfg.resolved["output_dir"] = cfg.output_dir
    return cfg


def _build_env_and_policy(cfg, seed):
    alg = cfg.algebra
    pol = cfg.policy
    pert = cfg.perturbation_config()
    kind = AlgebraKind(alg["kind"])
    if kind is AlgebraKind.SO3_PRODUCT:
        env = So3TrackingEnv(alg["J"], seed=seed, perturbation=pert)
    elif kind is AlgebraKind.SE_3:
        env = Se3Env(seed=seed, perturbation=pert)
    else:
        raise ConfigError([f"algebra.kind: '{kind.value}' has no training environment"])
    desc = env.descriptor
    if pol["features"] == "orientation_scaled" and kind is AlgebraKind.SO3_PRODUCT:
        fmap = OrientationScaledFeatures(desc, beta=pol["feature_beta"])
    else:
        fmap = ConstantBasisFeatures(desc)
    rng = np.random.default_rng(np.random.SeedSequence([seed, 11]))
    theta0 = rng.standard_normal(desc.d_g)
    theta0 /= np.linalg.norm(theta0)
    method = Method(cfg.optimizer["method"])
    if method is Method.AMBIENT_PG:
        policy = AmbientPolicy.create(desc.d_g, pol["ambient_factor"], pol["sigma"],
                                      seed=seed, clip_multiplier=pol["clip_multiplier"],
                                      initial_mean=theta0)
    else:
        policy = GaussianLiePolicy(desc, theta0, fmap, pol["sigma"],
                                   pol["clip_multiplier"])
    return env, policy


def cmd_train(args, argv):
    cfg = _resolve_config(args, "train")
    opt = dict(cfg.optimizer)
    for name, attr in (("T", "T"), ("eta", "eta"), ("B_theta", "B_theta"),
                       ("method", "method")):
        v = getattr(args, attr, None)
        if v is not None:
            opt[name] = v
    if args.J is not None:
        cfg.algebra["J"] = args.J
    if args.sigma_eps is not None:
        cfg.perturbation["transition_noise_sigma"] = args.sigma_eps
    if args.kappa_M is not None:
        cfg.perturbation["anisotropy"] = "correlated"
        cfg.perturbation["kappa_m"] = args.kappa_M
    rows = []

    def run(seed):
        env, policy = _build_env_and_policy(cfg, seed)
        run_cfg = OptimizerConfig(
            method=Method(opt["method"]), eta=opt["eta"],
            schedule=Schedule(opt["schedule"]), B_theta=opt["B_theta"],
            T=opt["T"], episodes_per_iter=opt["episodes_per_iter"],
            gamma=opt["gamma"], seed=seed, cg_iters=opt["cg_iters"],
        )
        _, record = lpg_run(env, policy, run_cfg)
        return record

    for seed, record in zip(cfg.seeds, experiments.seed_map(run, cfg.seeds)):
        for row in record.rows():
            rows.append({"seed": seed, **row})
    _write_outputs(cfg, "train", rows, argv)
    return 0


def cmd_dichotomy(args, argv):
    cfg = _resolve_config(args, "dichotomy")
    radii = (_parse_float_list(args.radii) if args.radii
             else cfg.experiment_params.get("radii", list(experiments.DICHOTOMY_RADII)))
    pairs = int(cfg.experiment_params.get("pairs", 400))
    rows = experiments.dichotomy_sweep(radii=radii, seeds=cfg.seeds, pairs=pairs)
    _write_outputs(cfg, "dichotomy", rows, argv)
    return 0


def cmd_bench(args, argv):
    cfg = _resolve_config(args, "bench")
    J_values = (_parse_int_list(args.J) if args.J
                else cfg.experiment_params.get("J_values", [10, 30, 50, 100, 200]))
    trials = args.trials or int(cfg.experiment_params.get("trials", 200))
    rows, exp_f, exp_p = experiments.timing_bench(J_values=J_values, trials=trials)
    for row in rows:
        row["factorization_exponent"] = exp_f
        row["projection_exponent"] = exp_p
    _write_outputs(cfg, "bench", rows, argv)
    return 0


def cmd_ablate(args, argv):
    cfg = _resolve_config(args, "ablate")
    ep = cfg.experiment_params
    T = int(ep.get("T", cfg.optimizer["T"]))
    common = dict(seeds=cfg.seeds, T=T, eta=cfg.optimizer["eta"],
                  sigma=cfg.policy["sigma"],
                  feature_beta=cfg.policy["feature_beta"])
    if args.which == "anisotropy":
        kappa_values = (_parse_float_list(args.kappa_M) if args.kappa_M
                        else ep.get("kappa_m_values", [1.0, 5.0, 10.0]))
        rows = experiments.anisotropy_ablation(
            kappa_m_values=kappa_values, joints=cfg.algebra["J"], **common)
    elif args.which == "robustness":
        sig_values = (_parse_float_list(args.sigma_eps) if args.sigma_eps
                      else ep.get("sigma_eps_values", [0.01, 0.05, 0.1]))
        rows = experiments.robustness_sweep(
            sigma_eps_values=sig_values, joints=cfg.algebra["J"], **common)
    else:
        J_values = (_parse_int_list(args.J) if args.J
                    else ep.get("J_values", [5, 10, 15, 20, 30]))
        rows = experiments.joint_count_sweep(J_values=J_values, **common)
    _write_outputs(cfg, f"ablate_{args.which}", rows, argv)
    return 0


def cmd_se3(args, argv):
    cfg = _resolve_config(args, "se3")
    if args.B_theta:
        B_values = [np.inf if b.lower() in ("inf", "infinity") else float(b)
                    for b in str(args.B_theta).split(",")]
    else:
        B_values = cfg.experiment_params.get("B_values", [np.inf, 2.0])
        B_values = [np.inf if str(b).lower() in ("inf", ".inf", "infinity") else float(b)
                    for b in B_values]
    T = args.T or int(cfg.experiment_params.get("T", 200))
    rows = experiments.se3_divergence_study(B_values=B_values, T=T, seeds=cfg.seeds)
    _write_outputs(cfg, "se3", rows, argv)
    return 0


def _witness_closed_forms(t, sigma, n):
    s2 = sigma * sigma
    entry = -0.5 * (np.exp(2 * t + 2 * s2) - 2 * np.exp(t + s2 / 2) + 1)
    rest = (n - 1) * (-0.5) * (np.exp(2 * s2) - 2 * np.exp(s2 / 2) + 1)
    g = entry + rest
    g1 = -(np.exp(2 * t + 2 * s2) - np.exp(t + s2 / 2))
    return g, g1


def cmd_witness(args, argv):
    from .algebra import AlgebraElement, hyperbolic_witness
    from .envs import witness_g2, witness_objective

    cfg = _resolve_config(args, "witness")
    t_values = _parse_float_list(args.t) if args.t else [0.0, 0.5, 1.0, 2.0]
    sigma_values = _parse_float_list(args.sigma) if args.sigma else [0.0]
    n = args.n or 3
    n_mc = int(cfg.experiment_params.get("n_mc", 4096))
    H = hyperbolic_witness(AlgebraKind.DIAG_N, n)
    rows = []
    header = f"{'t':>8} {'sigma':>8} {'g_closed':>14} {'g_mc':>14} " \
             f"{'gp_closed':>14} {'gpp_closed':>14}"
    print(header)
    for sigma in sigma_values:
        for t in t_values:
            theta = AlgebraElement(H.descriptor, t * H.coords)
            g_mc = witness_objective(theta, sigma, n_mc=n_mc, seed=cfg.seeds[0])
            g, g1 = _witness_closed_forms(t, sigma, n)
            g2 = witness_g2(t, sigma)
            rows.append({"t": t, "sigma": sigma, "g_closed": g, "g_mc": g_mc,
                         "gp_closed": g1, "gpp_closed": g2})
            print(f"{t:8.3f} {sigma:8.3f} {g:14.6g} {g_mc:14.6g} "
                  f"{g1:14.6g} {g2:14.6g}")
    if args.out:
        _write_outputs(cfg, "witness", rows, argv)
    return 0


def cmd_validate(args, argv):
    ok = validate_mod.run_all()
    print("validation:", "all checks passed" if ok else "FAILURES above")
    return 0 if ok else 1


def _add_common(p):
    p.add_argument("--config", help="YAML config file")
    p.add_argument("--seed", help="comma-separated seed list override")
    p.add_argument("--out", help="output directory override")
    p.add_argument("--tag", help="output subdirectory tag (default: timestamp)")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="liepg",
        description="Lie-projected policy gradient experiments",
    )
    parser.add_argument("--version", action="version", version=f"liepg {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="run the module property suites")
    p.set_defaults(handler=cmd_validate)

    p = sub.add_parser("train", help="train LPG / ambient / natural gradient")
    _add_common(p)
    p.add_argument("--method", choices=[m.value for m in Method])
    p.add_argument("--T", type=int)
    p.add_argument("--eta", type=float)
    p.add_argument("--B-theta", dest="B_theta", type=float)
    p.add_argument("--J", type=int)
    p.add_argument("--sigma-eps", dest="sigma_eps", type=float)
    p.add_argument("--kappa-M", dest="kappa_M", type=float)
    p.set_defaults(handler=cmd_train)

    p = sub.add_parser("dichotomy", help="Lipschitz growth sweep and classification")
    _add_common(p)
    p.add_argument("--radii", help="comma-separated radii")
    p.set_defaults(handler=cmd_dichotomy)

    p = sub.add_parser("bench", help="factorization vs projection timing")
    _add_common(p)
    p.add_argument("--J", help="comma-separated joint counts")
    p.add_argument("--trials", type=int)
    p.set_defaults(handler=cmd_bench)

    p = sub.add_parser("ablate", help="anisotropy | robustness | joints ablations")
    _add_common(p)
    p.add_argument("which", choices=["anisotropy", "robustness", "joints"])
    p.add_argument("--kappa-M", dest="kappa_M", help="comma-separated kappa_M values")
    p.add_argument("--sigma-eps", dest="sigma_eps",
                   help="comma-separated transition noise values")
    p.add_argument("--J", help="comma-separated joint counts (joints ablation)")
    p.set_defaults(handler=cmd_ablate)

    p = sub.add_parser("se3", help="SE(3) divergence study")
    _add_common(p)
    p.add_argument("--B-theta", dest="B_theta", help="comma-separated radii, inf allowed")
    p.add_argument("--T", type=int)
    p.set_defaults(handler=cmd_se3)

    p = sub.add_parser("witness", help="witness objective derivative tables")
    _add_common(p)
    p.add_argument("--t", help="comma-separated ray positions")
    p.add_argument("--sigma", help="comma-separated noise scales")
    p.add_argument("--n", type=int, help="ambient size (default 3)")
    p.set_defaults(handler=cmd_witness)

    return parser


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args, ["liepg"] + argv)
    except ConfigError as exc:
        for v in exc.violations:
            print(f"config error: {v}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
