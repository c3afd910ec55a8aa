"""Command line front end.

Subcommands: simulate (data collection only), compress (offline step),
run (the receding-horizon loop), sweep (eta vs. S curve), compare.

Configuration is a flat key-value text file, ``section.key = value`` per
line, ``#`` comments allowed; every key can be overridden on the command
line as ``--section.key=value``.

Exit codes: 0 success, 2 configuration error, 3 solver failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .compress import CompressionConfig, eta_curve, save_dataset
from .harness import (ExperimentConfig, HarnessError, InfeasibleStep,
                      ReferenceSpec, collect_training_data, compare_runs,
                      run_receding_horizon, write_comparison_csv)
from .hankel import save_trajectory_csv

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3


class ConfigError(ValueError):
    pass


def parse_config_file(path) -> dict:
    cfg = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}") from exc
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'section.key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        cfg[key] = value
    return cfg


def apply_overrides(cfg: dict, extras) -> dict:
    for token in extras:
        if not token.startswith("--") or "=" not in token:
            raise ConfigError(f"unrecognized argument {token!r}; "
                              "overrides look like --section.key=value")
        key, value = token[2:].split("=", 1)
        cfg[key] = value
    return cfg


def _get(cfg, key, cast, default):
    if key not in cfg:
        return default
    try:
        return cast(cfg[key])
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad value for {key}: {cfg[key]!r}") from exc


def _bool(v: str) -> bool:
    if v.lower() in ("1", "true", "yes", "on"):
        return True
    if v.lower() in ("0", "false", "no", "off"):
        return False
    raise ValueError(v)


def build_experiment(cfg: dict, require_compression: bool = False) -> ExperimentConfig:
    known_prefixes = ("system.", "data.", "noise.", "cost.", "reference.",
                      "robust.", "compress.", "run.", "input.", "sweep.")
    for key in cfg:
        if not key.startswith(known_prefixes):
            raise ConfigError(f"unknown config key {key!r}")

    system = _get(cfg, "system.kind", str, "quadcopter")
    if system == "file":
        system = _get(cfg, "system.model_file", str, None)
        if system is None:
            raise ConfigError("system.kind=file requires system.model_file")

    reference = ReferenceSpec(
        kind=_get(cfg, "reference.kind", str, "figure8"),
        period=_get(cfg, "reference.period", float, 10.0),
        amplitude=_get(cfg, "reference.amplitude", float, 1.0),
        altitude=_get(cfg, "reference.altitude", float, 1.0),
        value=_get(cfg, "reference.value", float, 1.0),
        tracked=_get(cfg, "reference.tracked", _int_tuple, None),
    )

    compression = None
    if _get(cfg, "compress.enabled", _bool, False) or require_compression:
        compression = CompressionConfig(
            S=_get(cfg, "compress.S", int, 8),
            ground_norm=_get(cfg, "compress.norm", str, "one"),
            init=_get(cfg, "compress.init", str, "kmeans++"),
            max_outer_iters=_get(cfg, "compress.max_outer_iters", int, 200),
            outer_tol=_get(cfg, "compress.outer_tol", float, 1e-6),
            gamma=_get(cfg, "compress.gamma", float, 0.0),
            seed=_get(cfg, "compress.seed", int, 0),
        )

    try:
        return ExperimentConfig(
            system=system,
            Ts=_get(cfg, "system.Ts", float, 0.05),
            Ki=_get(cfg, "data.Ki", int, 1),
            K=_get(cfg, "data.K", int, 30),
            N=_get(cfg, "data.N", int, 214),
            noise_kind=_get(cfg, "noise.kind", str, "none"),
            noise_std=_get(cfg, "noise.std", float, 0.0),
            noise_seed=_get(cfg, "noise.seed", int, 0),
            c=_get(cfg, "cost.c", float, 200.0),
            rho=_get(cfg, "cost.rho", float, 1e5),
            eps_beta=_get(cfg, "robust.eps_beta", float, 1e-3),
            reference=reference,
            compression=compression,
            steps=_get(cfg, "run.steps", int, 50),
            seed=_get(cfg, "run.seed", int, 0),
            outdir=_get(cfg, "run.outdir", str, None),
            input_lo=_get(cfg, "input.lo", float, -0.7007),
            input_hi=_get(cfg, "input.hi", float, 0.2993),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _int_tuple(v: str):
    return tuple(int(x) for x in v.split(",") if x.strip())


def _load_cfg(args, extras) -> dict:
    cfg = parse_config_file(args.config) if args.config else {}
    return apply_overrides(cfg, extras)


def _outdir(exp: ExperimentConfig) -> Path:
    out = Path(exp.outdir or "out")
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_simulate(args, extras) -> int:
    exp = build_experiment(_load_cfg(args, extras))
    traj, blocks = collect_training_data(exp)
    out = _outdir(exp)
    save_trajectory_csv(traj, out / "training_data.csv")
    np.savetxt(out / "hankel_stacked.csv", blocks.stacked(), delimiter=",")
    print(f"collected {len(traj)} steps; data matrix {blocks.stacked().shape} "
          f"with R={blocks.R} columns -> {out}")
    return EXIT_OK


def cmd_compress(args, extras) -> int:
    exp = build_experiment(_load_cfg(args, extras), require_compression=True)
    from .compress import compress as run_compress
    _, blocks = collect_training_data(exp)
    dataset = run_compress(blocks.stacked(), exp.compression)
    out = _outdir(exp)
    save_dataset(dataset, out / "synthetic_atoms.csv", out / "synthetic_meta.txt")
    print(f"S={dataset.S} eta={dataset.eta:.6g} "
          f"iterations={dataset.iterations} -> {out}")
    return EXIT_OK


def cmd_run(args, extras) -> int:
    exp = build_experiment(_load_cfg(args, extras))
    if exp.outdir is None:
        exp.outdir = "out"
    log = run_receding_horizon(exp)
    print(f"{log.steps} steps, dataset={log.provenance['dataset']} "
          f"S={log.provenance['S']} eta={log.provenance['eta']:.6g} "
          f"total tracking cost {log.total_tracking_cost():.6g}, "
          f"mean solve time {log.mean_solve_time() * 1e3:.2f} ms -> {exp.outdir}")
    return EXIT_OK


def cmd_sweep(args, extras) -> int:
    cfg = _load_cfg(args, extras)
    exp = build_experiment(cfg, require_compression=True)
    S_list = _get(cfg, "sweep.S_list", _int_tuple, None)
    _, blocks = collect_training_data(exp)
    if S_list is None:
        R = blocks.R
        S_list = tuple(sorted({max(1, R // 16), R // 8, R // 4, R // 2, R}))
    results = eta_curve(blocks.stacked(), S_list, exp.compression)
    out = _outdir(exp)
    with open(out / "eta_curve.csv", "w") as fh:
        fh.write("S,eta,wall_time\n")
        for S, eta, wall in results:
            fh.write(f"{S},{eta!r},{wall!r}\n")
    for S, eta, wall in results:
        print(f"S={S:4d}  eta={eta:.6g}  time={wall:.2f}s")
    return EXIT_OK


def cmd_compare(args, extras) -> int:
    cfg = _load_cfg(args, extras)
    exp = build_experiment(cfg)
    base = run_receding_horizon(exp)
    exp_syn = build_experiment(dict(cfg), require_compression=True)
    exp_syn.outdir = None
    log_syn = run_receding_horizon(exp_syn)
    rows = compare_runs([base, log_syn])
    out = _outdir(exp)
    write_comparison_csv(rows, out / "comparison.csv")
    for row in rows:
        print(f"{row['dataset']:>9}  S={row['S']:4d}  "
              f"cost={row['total_tracking_cost']:.6g}  "
              f"solve={row['mean_solve_time'] * 1e3:.2f} ms")
    return EXIT_OK


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="syndeepc",
        description="Wasserstein dataset compression for robust data-enabled "
                    "predictive control")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in (("simulate", cmd_simulate), ("compress", cmd_compress),
                     ("run", cmd_run), ("sweep", cmd_sweep),
                     ("compare", cmd_compare)):
        p = sub.add_parser(name)
        p.add_argument("--config", default=None, help="flat key-value config file")
        p.set_defaults(func=fn)
    args, extras = parser.parse_known_args(argv)
    try:
        return args.func(args, extras)
    except (ConfigError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (HarnessError, RuntimeError) as exc:
        if isinstance(exc, InfeasibleStep):
            print(exc.dump, file=sys.stderr)
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
