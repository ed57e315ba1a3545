"""Command-line driver: simulate, design, filter, bench, plot.

Every command reads a JSON config, writes CSV/SVG artifacts into the
output directory, and records a ``*.meta.json`` sidecar with the config
hash, seed and package version.  Identical config and seed reproduce all
CSV/SVG outputs byte-for-byte regardless of --threads; only the sidecar
timestamp differs.

Exit status: 0 success, 1 runtime or numerical failure, 2 usage or input
error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time

import numpy as np

from . import __version__, bma
from .bench import (ExperimentConfig, default_bo_config, read_aggregate_csv,
                    run_experiment, write_aggregate_csv, write_runs_csv)
from .bench import mse as compute_mse
from .bo import BoConfig, write_history_csv
from .bomsd import design_model_set, read_model_set_csv, write_model_set_csv
from .gp import KernelConfig
from .models import (DomainError, exp1_model, exp2_model,
                     linear_gaussian_model, read_trajectory_csv, simulate,
                     write_trajectory_csv)
from .svgplot import bar_chart, line_chart


class UsageError(Exception):
    """Bad invocation or malformed input; maps to exit status 2."""


def _load_config(path):
    if not os.path.exists(path):
        raise UsageError(f"config file not found: {path}")
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise UsageError(f"config {path} is not valid JSON: {exc}") from exc


def _require(config, key):
    if key not in config:
        raise UsageError(f"config is missing required key {key!r}")
    return config[key]


def _build_model(config):
    name = _require(config, "model")
    if name == "exp1":
        return exp1_model()
    if name == "exp2":
        return exp2_model()
    if name == "linear_gaussian":
        return linear_gaussian_model(
            a=float(config.get("a", 0.9)),
            q=float(config.get("q", 1.0)),
            r=float(config.get("r", 1.0)),
            x0_mean=float(config.get("x0_mean", 0.0)),
            x0_var=float(config.get("x0_var", 1.0)),
        )
    raise UsageError(f"unknown model name: {name!r} (expected exp1, exp2 or linear_gaussian)")


def _bo_from_config(config, seed):
    base = default_bo_config(seed)
    kernel = KernelConfig(
        length_scales=np.atleast_1d(config.get("length_scale", 0.15)),
        signal_variance=float(config.get("signal_variance", 1.0)),
        noise_variance=float(config.get("noise_variance", 1.0)),
        kind=config.get("kernel", "gaussian"),
    )
    return BoConfig(kernel=kernel,
                    budget=int(config.get("budget", base.budget)),
                    n_init=int(config.get("n_init", base.n_init)),
                    acq_grid=int(config.get("acq_grid", base.acq_grid)),
                    alpha=float(config.get("alpha", base.alpha)),
                    seed=seed)


def _seed_of(config, args, default=0):
    if args.seed is not None:
        return int(args.seed)
    return int(config.get("seed", config.get("root_seed", default)))


def _write_meta(artifact_path, config, seed):
    meta = {
        "config_sha256": hashlib.sha256(
            json.dumps(config, sort_keys=True).encode()).hexdigest(),
        "seed": seed,
        "version": __version__,
        "created": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
    }
    with open(str(artifact_path) + ".meta.json", "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _out_dir(args):
    os.makedirs(args.out, exist_ok=True)
    return args.out


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def cmd_simulate(args) -> int:
    config = _load_config(args.config)
    model = _build_model(config)
    seed = _seed_of(config, args)
    T = int(_require(config, "T"))
    if T < 1:
        raise UsageError(f"T must be >= 1, got {T}")
    try:
        traj = simulate(model, _require(config, "theta"), T, seed)
    except DomainError as exc:
        raise UsageError(str(exc)) from exc
    out = os.path.join(_out_dir(args), "trajectory.csv")
    write_trajectory_csv(out, traj)
    _write_meta(out, config, seed)
    print(out)
    return 0


def _load_historical(config, args, seed):
    hist = _require(config, "historical")
    if "csv" in hist:
        path = hist["csv"]
        if not os.path.exists(path):
            raise UsageError(f"historical data file not found: {path}")
        _, _, ys = read_trajectory_csv(path)
        return ys
    sim_config = dict(hist)
    sim_config.setdefault("model", config.get("model"))
    model = _build_model(sim_config)
    traj = simulate(model, _require(sim_config, "theta"),
                    int(_require(sim_config, "T")),
                    int(sim_config.get("seed", seed)))
    return traj.observations


def cmd_design(args) -> int:
    config = _load_config(args.config)
    model = _build_model(config)
    seed = _seed_of(config, args)
    n_components = int(_require(config, "K"))
    try:
        observations = _load_historical(config, args, seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    n_particles = int(config.get("n_particles", 500))
    bo_cfg = _bo_from_config(config.get("bo", {}), seed)
    # m < K is a runtime failure (exit 1), reported with both values
    result = design_model_set(model, observations, n_components, bo_cfg,
                              n_particles, seed, threads=args.threads)
    out_dir = _out_dir(args)
    out = os.path.join(out_dir, "model_set.csv")
    write_model_set_csv(out, result)
    _write_meta(out, config, seed)
    for k, bo_result in enumerate(result.bo_results):
        write_history_csv(os.path.join(out_dir, f"bo_history_{k + 1}.csv"), bo_result)
    print(out)
    return 0


def cmd_filter(args) -> int:
    config = _load_config(args.config)
    model = _build_model(config)
    seed = _seed_of(config, args)
    obs_path = _require(config, "observations")
    if not os.path.exists(obs_path):
        raise UsageError(f"observations file not found: {obs_path}")
    try:
        _, truth, ys = read_trajectory_csv(obs_path)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc

    if "model_set_csv" in config:
        path = config["model_set_csv"]
        if not os.path.exists(path):
            raise UsageError(f"model set file not found: {path}")
        try:
            thetas = read_model_set_csv(path)
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
    else:
        thetas = np.atleast_2d(np.asarray(_require(config, "thetas"), dtype=float).reshape(-1, model.param_dim))
    if "K" in config and int(config["K"]) != len(thetas):
        raise UsageError(
            f"declared K={config['K']} does not match {len(thetas)} parameter vectors")

    run = bma.run(model, thetas, ys, int(config.get("n_per_model", 200)), seed)
    out_dir = _out_dir(args)
    est_path = os.path.join(out_dir, "estimates.csv")
    with open(est_path, "w", newline="") as fh:
        import csv as _csv
        w = _csv.writer(fh)
        w.writerow(["t", "estimate"])
        for j in range(len(ys)):
            w.writerow([model.t0 + 1 + j, repr(float(run.estimates[j, 0]))])
    diag_path = os.path.join(out_dir, "diagnostics.csv")
    bma.write_diagnostics_csv(diag_path, run, t0=model.t0)
    _write_meta(est_path, config, seed)
    if truth is not None:
        print(f"mse={compute_mse(run.estimates, truth)!r}")
    print(est_path)
    print(diag_path)
    return 0


def cmd_bench(args) -> int:
    config = _load_config(args.config)
    seed = _seed_of(config, args)
    experiment = _require(config, "experiment")
    if experiment not in ("exp1", "exp2", "linear_gaussian_oracle"):
        raise UsageError(f"unknown experiment: {experiment!r}")
    kwargs = dict(experiment=experiment, root_seed=seed, threads=args.threads,
                  bo=_bo_from_config(config.get("bo", {}), seed))
    for field_name in ("K_values", "Po_values", "runs", "T", "m_hist",
                       "n_particles", "design_particles", "oracle_particle_counts"):
        if field_name in config:
            kwargs[field_name] = config[field_name]
    try:
        cfg = ExperimentConfig(**kwargs)
    except (ValueError, TypeError) as exc:
        raise UsageError(str(exc)) from exc
    result = run_experiment(cfg)
    out_dir = _out_dir(args)
    runs_path = os.path.join(out_dir, f"{experiment}_runs.csv")
    agg_path = os.path.join(out_dir, f"{experiment}_aggregate.csv")
    write_runs_csv(runs_path, result)
    write_aggregate_csv(agg_path, result)
    _write_meta(agg_path, config, seed)
    print(runs_path)
    print(agg_path)
    return 0


def cmd_plot(args) -> int:
    config = _load_config(args.config)
    path = _require(config, "aggregate_csv")
    if not os.path.exists(path):
        raise UsageError(f"aggregate file not found: {path}")
    try:
        experiment, rows = read_aggregate_csv(path)
    except ValueError as exc:
        if "no data rows" in str(exc):
            print(f"error: {exc}", file=sys.stderr)
            return 1
        raise UsageError(str(exc)) from exc

    methods = []
    for row in rows:
        if row.method not in methods:
            methods.append(row.method)
    out_dir = _out_dir(args)
    if experiment == "exp1":
        ks = sorted({row.K for row in rows})
        series = {m: [next(r.mse_mean for r in rows if r.method == m and r.K == k)
                      for k in ks] for m in methods}
        svg = line_chart(ks, series, "number of model components K", "mean MSE",
                         title="MSE vs. K")
        out = os.path.join(out_dir, "mse_vs_k.svg")
    else:
        cells = []
        for row in rows:
            label = row.po if row.po is not None else row.K
            if label not in cells:
                cells.append(label)
        xlabel = "true outlier probability" if experiment == "exp2" else "particle count"
        series = {}
        for m in methods:
            heights, errors = [], []
            for cell in cells:
                row = next(r for r in rows if r.method == m
                           and (r.po if r.po is not None else r.K) == cell)
                heights.append(row.mse_mean)
                errors.append(2.0 * row.mse_std)
            series[m] = (heights, errors)
        ylabel = "mean MSE" if experiment == "exp2" else "|log-evidence error|"
        svg = bar_chart(cells, series, xlabel, ylabel,
                        title="mean and two standard deviations")
        out = os.path.join(out_dir, f"{experiment}_bars.svg")
    with open(out, "w") as fh:
        fh.write(svg)
    _write_meta(out, config, _seed_of(config, args))
    print(out)
    return 0


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bmapf",
        description="Model-averaged particle filtering with optimization-designed model sets",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn, doc in (
        ("simulate", cmd_simulate, "generate a trajectory CSV from a model"),
        ("design", cmd_design, "design a model set from historical observations"),
        ("filter", cmd_filter, "run the model-averaged filter over observations"),
        ("bench", cmd_bench, "run a benchmark sweep and write result CSVs"),
        ("plot", cmd_plot, "render SVG charts from an aggregate CSV"),
    ):
        p = sub.add_parser(name, help=doc)
        p.add_argument("--config", required=True, help="path to JSON configuration")
        p.add_argument("--out", default="out", help="output directory (default: out)")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--threads", type=int, default=os.cpu_count() or 1,
                       help="worker parallelism cap (does not change results)")
        p.set_defaults(func=fn)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, RuntimeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
