"""Command-line experiment orchestrator.

Two subcommands: ``run`` executes a single model and writes its moment
series, snapshots and a manifest; ``compare`` runs the cross-model bundle
(limit PDE once per drift value, integral-kernel model per scaling value,
agent model per scaling value and seed) plus the convergence report.

Exit status: 0 success, 2 configuration error (the message names the
offending key or guard), 3 runtime invariant violation.
"""
from __future__ import annotations

import argparse
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import __version__
from .abm import abm_run
from .analysis import epsilon_sweep
from .config import (
    CONFIG_FILE_KEYS,
    ConfigError,
    InvariantViolation,
    PROFILES,
    SimConfig,
    config_from_file,
    echo_config,
)
from .ide import ide_run
from .io import (
    moments_filename,
    run_file_stem,
    snapshot_filename,
    write_convergence_csv,
    write_manifest,
    write_mean_series_csv,
    write_moments_csv,
    write_orders_csv,
    write_snapshot_csv,
)
from .pde import PdeScheme, pde_run

_INT_OVERRIDES = {"n_agents", "seed"}
_OVERRIDE_KEYS = set(CONFIG_FILE_KEYS) | {"t_final", "record_dt"}


def _parse_overrides(pairs) -> dict:
    out = {}
    for pair in pairs:
        if "=" not in pair:
            raise ConfigError(f"override {pair!r} is not of the form key=value")
        key, _, text = pair.partition("=")
        key = key.strip()
        if key not in _OVERRIDE_KEYS:
            raise ConfigError(f"unknown override key {key!r}")
        try:
            out[key] = int(text) if key in _INT_OVERRIDES else float(text)
        except ValueError:
            raise ConfigError(f"could not parse override value for {key!r}: {text!r}")
    return out


def _resolve_config(args) -> SimConfig:
    cfg = PROFILES[args.profile]()
    if args.config:
        cfg = config_from_file(args.config, base=cfg)
    if getattr(args, "overrides", None):
        cfg = cfg.with_overrides(**_parse_overrides(args.overrides))
    if args.seed is not None:
        cfg = cfg.with_overrides(seed=args.seed)
    if args.snapshot_times:
        times = tuple(float(s) for s in args.snapshot_times.split(","))
        cfg = cfg.with_overrides(snapshot_times=times)
    return cfg


def _write_run_outputs(out_dir, result, alpha, epsilon) -> list:
    outputs = []
    mpath = os.path.join(out_dir, moments_filename(result.model, alpha, epsilon))
    write_moments_csv(mpath, result.series)
    outputs.append(mpath)
    for snap in result.snapshots:
        spath = os.path.join(out_dir, snapshot_filename(result.model, alpha, epsilon, snap.time))
        write_snapshot_csv(spath, snap)
        outputs.append(spath)
    return outputs


def _manifest_entries(config: SimConfig, model: str) -> dict:
    entries = {f"config.{k}": v for k, v in echo_config(config).items()}
    for name, value in config.guard_values(model).items():
        entries[f"guard.{name}"] = format(value, ".17g")
    if model == "ide":
        from .ide import build_kernel_band
        band = build_kernel_band(config.grid(), config.kernel())
        entries["guard.kernel_mass_defect"] = format(band.mass_defect, ".17g")
    entries["version"] = __version__
    return entries


def cmd_run(args) -> int:
    config = _resolve_config(args).with_overrides(model_selector=args.model)
    config.validate(args.model)
    os.makedirs(args.out_dir, exist_ok=True)
    started = time.perf_counter()
    if args.model == "abm":
        result = abm_run(config)
    elif args.model == "ide":
        result = ide_run(config)
    else:
        result = pde_run(config, scheme=PdeScheme(advection=args.scheme))
    wall = time.perf_counter() - started
    outputs = _write_run_outputs(args.out_dir, result, config.alpha, config.epsilon)

    entries = _manifest_entries(config, args.model)
    entries["model"] = args.model
    if args.model == "pde":
        entries["pde_scheme"] = args.scheme
    entries["wall_clock_seconds"] = format(wall, ".3f")
    entries["outputs"] = ",".join(os.path.basename(p) for p in outputs)
    write_manifest(os.path.join(args.out_dir, "manifest.txt"), entries)
    return 0


def _abm_job(payload):
    config, seed = payload
    result = abm_run(config.with_overrides(seed=seed))
    return seed, result


def cmd_compare(args) -> int:
    base = _resolve_config(args)
    alphas = args.alpha if args.alpha else [-0.3, 0.0, 0.3]
    epsilons = args.epsilon if args.epsilon else [1.0, 10.0 ** -0.5, 0.1]
    seeds = [int(args.seed or 0) + i for i in range(args.seeds)]
    os.makedirs(args.out_dir, exist_ok=True)

    outputs = []
    entries = {f"config.{k}": v for k, v in echo_config(base).items()}
    entries["version"] = __version__
    entries["pde_scheme"] = "central"
    entries["alphas"] = ",".join(format(a, "g") for a in alphas)
    entries["epsilons"] = ",".join(format(e, "g") for e in epsilons)
    entries["seeds"] = ",".join(str(s) for s in seeds)
    if not seeds:
        entries["note"] = "deterministic-only comparison (no agent-model seeds)"

    for alpha in alphas:
        cfg_a = base.with_overrides(alpha=alpha)
        started = time.perf_counter()
        sweep_runs = []
        # a single-epsilon invocation degenerates to the documented
        # fit-rejected sweep (metrics still computed, no fitted orders)
        sweep_eps = epsilons if len(epsilons) > 1 else list(epsilons) * 2
        report = epsilon_sweep(cfg_a, sweep_eps, collect=sweep_runs.append)
        entries[f"wall_clock_sweep_{alpha:+g}_seconds"] = format(time.perf_counter() - started, ".3f")

        rpath = os.path.join(args.out_dir, f"convergence_{alpha:+g}.csv")
        write_convergence_csv(rpath, report)
        outputs.append(rpath)
        opath = os.path.join(args.out_dir, f"orders_{alpha:+g}.csv")
        write_orders_csv(opath, report)
        outputs.append(opath)
        if report.fit_diagnostics:
            entries[f"fit_diagnostics_{alpha:+g}"] = report.fit_diagnostics

        for result in sweep_runs:
            eps = cfg_a.epsilon if result.model == "pde" else result.config.epsilon
            outputs += _write_run_outputs(args.out_dir, result, alpha, eps)

        for eps in epsilons:
            cfg_ae = cfg_a.with_overrides(epsilon=eps)
            if not seeds:
                continue
            jobs = [(cfg_ae, seed) for seed in seeds]
            if args.jobs > 1:
                with ProcessPoolExecutor(max_workers=args.jobs) as pool:
                    results = list(pool.map(_abm_job, jobs))
            else:
                results = [_abm_job(job) for job in jobs]
            per_seed = [res.series for _, res in results]
            times = per_seed[0].times
            names = ("rho", "p", "E")
            stacked = {n: np.vstack([s.metric(n) for s in per_seed]) for n in names}
            means = {n: stacked[n].mean(axis=0) for n in names}
            ses = {n: stacked[n].std(axis=0, ddof=1) / np.sqrt(len(per_seed))
                   if len(per_seed) > 1 else np.zeros_like(times) for n in names}
            apath = os.path.join(args.out_dir,
                                 f"{run_file_stem('abm', alpha, eps)}_seedmean_moments.csv")
            write_mean_series_csv(apath, times, means, ses)
            outputs.append(apath)
            seed0, res0 = results[0]
            outputs += _write_run_outputs(args.out_dir, res0, alpha, eps)

    entries["outputs"] = ",".join(os.path.basename(p) for p in outputs)
    write_manifest(os.path.join(args.out_dir, "manifest.txt"), entries)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="phenokinetics",
        description="Simulate and cross-validate phenotype-structured population dynamics")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="flat key = value configuration file")
        p.add_argument("--profile", choices=sorted(PROFILES), default="desk",
                       help="base parameter profile (default: desk)")
        p.add_argument("--seed", type=int, default=None, help="base RNG seed")
        p.add_argument("--out-dir", default="out", help="output directory")
        p.add_argument("--snapshot-times", default="",
                       help="comma-separated snapshot instants (default: final time)")

    run_p = sub.add_parser("run", help="run a single model")
    common(run_p)
    run_p.add_argument("model", choices=("abm", "ide", "pde"))
    run_p.add_argument("overrides", nargs="*", help="key=value parameter overrides")
    run_p.add_argument("--scheme", choices=("upwind", "central"), default="upwind",
                       help="advection discretisation for the pde model")
    run_p.set_defaults(func=cmd_run)

    cmp_p = sub.add_parser("compare", help="cross-model comparison and scaling sweep")
    common(cmp_p)
    cmp_p.add_argument("--alpha", type=float, action="append", default=None,
                       help="drift coefficient (repeatable; default -0.3 0 0.3)")
    cmp_p.add_argument("--epsilon", type=float, action="append", default=None,
                       help="scaling parameter (repeatable; default 1, 10^-1/2, 0.1)")
    cmp_p.add_argument("--seeds", type=int, default=10,
                       help="number of agent-model seeds (0 skips the agent model)")
    cmp_p.add_argument("--jobs", type=int, default=1, help="parallel worker limit")
    cmp_p.set_defaults(func=cmd_compare)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except InvariantViolation as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
