"""Benchmark harness: designed vs. randomly chosen model sets.

Reproduces the two simulation studies at desk scale.  Study 1 sweeps the
number of model components K on the first benchmark model (true parameter
0.657); study 2 fixes K = 3 on the second benchmark model and sweeps the
true outlier probability.  Both compare the filter built on a designed
model set against one built on uniformly drawn parameters, using paired
runs: the two methods consume the identical test trajectory and filter
seed, so MSE differences are not confounded by trajectory noise.  A
linear-Gaussian oracle suite validates the evidence estimator against the
exact Kalman recursion.
"""

from __future__ import annotations

import csv
from concurrent.futures import ProcessPoolExecutor, ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import stats

from ._rng import (TAG_BENCH_BASELINE, TAG_BENCH_DESIGN, TAG_BENCH_FILTER,
                   TAG_BENCH_HIST, TAG_BENCH_TRAJ, derive_seed, stream)
from . import bma
from .bo import BoConfig
from .bomsd import design_model_set
from .gp import KernelConfig
from .kalman import kalman_filter, kalman_log_evidence  # noqa: F401  (re-export)
from .models import exp1_model, exp2_model, linear_gaussian_model, simulate
from .smc import run_pf

EXP1_TRUE_THETA = 0.657
EXP1_T = 500
EXP2_T = 599
EXP2_K = 3
ORACLE_A, ORACLE_Q, ORACLE_R = 0.9, 1.0, 1.0


def default_bo_config(seed: int = 0) -> BoConfig:
    """Optimizer settings used by the benchmarks (budget 40, UCB alpha 2)."""
    kernel = KernelConfig(length_scales=[0.15], signal_variance=1.0,
                          noise_variance=1.0)
    return BoConfig(kernel=kernel, budget=40, n_init=5, acq_grid=512,
                    alpha=2.0, seed=seed)


@dataclass(frozen=True)
class ExperimentConfig:
    """Settings for one benchmark sweep.

    ``experiment`` is one of exp1, exp2, linear_gaussian_oracle.  For exp1
    the sweep runs over ``K_values``; for exp2 over ``Po_values`` with K
    fixed.  ``T`` defaults to the experiment's native trajectory length.
    """

    experiment: str
    K_values: tuple = (2, 5, 10, 20)
    Po_values: tuple = (0.1, 0.3, 0.5, 0.7, 0.9)
    runs: int = 100
    T: Optional[int] = None
    m_hist: int = 200
    n_particles: int = 200
    design_particles: int = 500
    root_seed: int = 0
    bo: BoConfig = field(default_factory=default_bo_config)
    threads: int = 1
    oracle_particle_counts: tuple = (1000, 100000)

    def __post_init__(self):
        if self.experiment not in ("exp1", "exp2", "linear_gaussian_oracle"):
            raise ValueError(f"unknown experiment: {self.experiment!r}")
        if self.runs < 1:
            raise ValueError("runs must be >= 1")
        object.__setattr__(self, "K_values", tuple(int(k) for k in np.atleast_1d(self.K_values)))
        object.__setattr__(self, "Po_values", tuple(float(p) for p in np.atleast_1d(self.Po_values)))
        if self.experiment in ("exp1", "exp2") and any(k < 2 for k in self.K_values):
            raise ValueError("method comparisons need K >= 2 (a single model has nothing to average)")

    def horizon(self) -> int:
        if self.T is not None:
            return int(self.T)
        return {"exp1": EXP1_T, "exp2": EXP2_T}.get(self.experiment, 20)


@dataclass(frozen=True)
class RunRecord:
    method: str
    K: Optional[int]
    po: Optional[float]
    run: int
    mse: float


@dataclass(frozen=True)
class CellAggregate:
    method: str
    K: Optional[int]
    po: Optional[float]
    mse_mean: float
    mse_std: float
    n_runs: int


@dataclass(frozen=True)
class BenchResult:
    experiment: str
    records: tuple          # RunRecords in (cell, run, method) order
    aggregates: tuple       # CellAggregates in (cell, method) order

    def cell_mses(self, method: str, K=None, po=None) -> np.ndarray:
        """Per-run MSEs of one (method, cell) in run order."""
        return np.array([r.mse for r in self.records
                         if r.method == method and r.K == K and r.po == po])


def mse(estimates, truth) -> float:
    """Time-averaged squared error (1/T) * sum_t ||estimate_t - x_t||^2."""
    est = np.atleast_2d(np.asarray(estimates, dtype=float).T).T
    tru = np.atleast_2d(np.asarray(truth, dtype=float).T).T
    if est.shape != tru.shape:
        raise ValueError(f"length/shape mismatch: {est.shape} vs {tru.shape}")
    diff = est - tru
    return float(np.mean(np.sum(diff * diff, axis=1)))


def paired_pvalue_less(a, b) -> float:
    """One-sided paired t-test p-value for mean(a) < mean(b)."""
    return float(stats.ttest_rel(a, b, alternative="less").pvalue)


def _parallel(fn, items, workers, use_processes=False):
    """Ordered map over independent tasks; worker count never changes results."""
    if workers > 1 and use_processes:
        # fork-based workers give real parallelism on the numpy-light loops;
        # every task carries its own seed derivation, so scheduling is free
        try:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                return list(pool.map(fn, items, chunksize=1))
        except (OSError, RuntimeError):
            pass  # no subprocess support: fall through to threads
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, items))
    return [fn(item) for item in items]


def _model_for(experiment):
    if experiment == "exp1":
        return exp1_model()
    if experiment == "exp2":
        return exp2_model()
    return linear_gaussian_model(ORACLE_A, ORACLE_Q, ORACLE_R)


def _paired_task(args):
    """Top-level worker (picklable): one paired cell run from plain data."""
    cfg, ci, theta_star, n_components, ri = args
    model = _model_for(cfg.experiment)
    return _paired_cell_run(model, theta_star, n_components, cfg, ci, ri,
                            cfg.horizon())


def _oracle_task(args):
    cfg, ci, n, ri = args
    model = _model_for(cfg.experiment)
    traj = simulate(model, [ORACLE_A], cfg.horizon(),
                    derive_seed(cfg.root_seed, TAG_BENCH_TRAJ, 0, ri))
    exact = kalman_log_evidence(ORACLE_A, ORACLE_Q, ORACLE_R, 0.0, 1.0,
                                traj.observations)
    pf = run_pf(model, [ORACLE_A], traj.observations, n,
                derive_seed(cfg.root_seed, TAG_BENCH_FILTER, ci, ri))
    return abs(pf.log_evidence - exact)


def _aggregate(experiment, records) -> BenchResult:
    order = []
    groups = {}
    for rec in records:
        keyed = (rec.method, rec.K, rec.po)
        if keyed not in groups:
            groups[keyed] = []
            order.append(keyed)
        groups[keyed].append(rec.mse)
    aggregates = tuple(
        CellAggregate(m, k, p,
                      float(np.mean(groups[(m, k, p)])),
                      float(np.std(groups[(m, k, p)], ddof=1)) if len(groups[(m, k, p)]) > 1 else 0.0,
                      len(groups[(m, k, p)]))
        for (m, k, p) in order
    )
    return BenchResult(experiment, tuple(records), aggregates)


def _paired_cell_run(model, theta_star, n_components, cfg: ExperimentConfig,
                     ci: int, ri: int, horizon: int):
    """One paired run: same trajectory and filter seed for both methods."""
    root = cfg.root_seed
    traj = simulate(model, theta_star, horizon,
                    derive_seed(root, TAG_BENCH_TRAJ, ci, ri))
    hist = simulate(model, theta_star, cfg.m_hist,
                    derive_seed(root, TAG_BENCH_HIST, ci, ri))

    lo, hi = model.param_domain[:, 0], model.param_domain[:, 1]
    base_rng = stream(root, TAG_BENCH_BASELINE, ci, ri)
    base_thetas = lo + base_rng.random((n_components, model.param_dim)) * (hi - lo)

    design = design_model_set(model, hist.observations, n_components, cfg.bo,
                              cfg.design_particles,
                              derive_seed(root, TAG_BENCH_DESIGN, ci, ri))

    filter_seed = derive_seed(root, TAG_BENCH_FILTER, ci, ri)
    base_run = bma.run(model, base_thetas, traj.observations,
                       cfg.n_particles, filter_seed)
    msd_run = bma.run(model, design.thetas, traj.observations,
                      cfg.n_particles, filter_seed)
    return (mse(base_run.estimates, traj.states),
            mse(msd_run.estimates, traj.states))


def run_experiment_1(cfg: ExperimentConfig) -> BenchResult:
    """Sweep the number of model components on the first benchmark model."""
    if cfg.experiment != "exp1":
        raise ValueError("config is not an exp1 config")
    tasks = [(cfg, ci, [EXP1_TRUE_THETA], K, ri)
             for ci, K in enumerate(cfg.K_values) for ri in range(cfg.runs)]
    paired = _parallel(_paired_task, tasks, cfg.threads, use_processes=True)
    records = []
    for (_, _, _, K, ri), (base, msd) in zip(tasks, paired):
        records.append(RunRecord("baseline", K, None, ri, base))
        records.append(RunRecord("msd", K, None, ri, msd))
    return _aggregate("exp1", records)


def run_experiment_2(cfg: ExperimentConfig) -> BenchResult:
    """Sweep the true outlier probability on the second benchmark model."""
    if cfg.experiment != "exp2":
        raise ValueError("config is not an exp2 config")
    n_components = cfg.K_values[0] if cfg.K_values else EXP2_K
    tasks = [(cfg, ci, [po], n_components, ri)
             for ci, po in enumerate(cfg.Po_values) for ri in range(cfg.runs)]
    paired = _parallel(_paired_task, tasks, cfg.threads, use_processes=True)
    records = []
    for (_, _, theta_star, _, ri), (base, msd) in zip(tasks, paired):
        records.append(RunRecord("baseline", n_components, theta_star[0], ri, base))
        records.append(RunRecord("msd", n_components, theta_star[0], ri, msd))
    return _aggregate("exp2", records)


def run_oracle_experiment(cfg: ExperimentConfig) -> BenchResult:
    """Evidence-estimator validation against the exact Kalman recursion.

    The ``mse`` column holds |PF log-evidence - exact log-evidence| per run
    and particle count (the particle count is reported in the K column).
    """
    if cfg.experiment != "linear_gaussian_oracle":
        raise ValueError("config is not a linear_gaussian_oracle config")
    tasks = [(cfg, ci, n, ri) for ci, n in enumerate(cfg.oracle_particle_counts)
             for ri in range(cfg.runs)]
    errors = _parallel(_oracle_task, tasks, cfg.threads, use_processes=True)
    records = [RunRecord("pf", n, None, ri, err)
               for (_, _, n, ri), err in zip(tasks, errors)]
    return _aggregate("linear_gaussian_oracle", records)


def run_experiment(cfg: ExperimentConfig) -> BenchResult:
    runner = {"exp1": run_experiment_1, "exp2": run_experiment_2,
              "linear_gaussian_oracle": run_oracle_experiment}[cfg.experiment]
    return runner(cfg)


# ---------------------------------------------------------------------------
# CSV output
# ---------------------------------------------------------------------------

def _fmt(value) -> str:
    return "" if value is None else repr(float(value)) if isinstance(value, float) else str(value)


def write_runs_csv(path, result: BenchResult) -> None:
    """Per-run results: experiment,method,K,Po,run,mse."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["experiment", "method", "K", "Po", "run", "mse"])
        for r in result.records:
            w.writerow([result.experiment, r.method, _fmt(r.K), _fmt(r.po),
                        r.run, repr(r.mse)])


def write_aggregate_csv(path, result: BenchResult) -> None:
    """Aggregates: experiment,method,K,Po,mse_mean,mse_std,n_runs."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["experiment", "method", "K", "Po", "mse_mean", "mse_std", "n_runs"])
        for a in result.aggregates:
            w.writerow([result.experiment, a.method, _fmt(a.K), _fmt(a.po),
                        repr(a.mse_mean), repr(a.mse_std), a.n_runs])


def read_aggregate_csv(path) -> tuple[str, list[CellAggregate]]:
    """Parse an aggregate CSV back into CellAggregate rows."""
    rows = []
    experiment = None
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise ValueError(f"{path}: empty CSV")
        expected = ["experiment", "method", "K", "Po", "mse_mean", "mse_std", "n_runs"]
        if [h.strip() for h in header] != expected:
            raise ValueError(f"{path}: line 1: expected header {','.join(expected)}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                experiment = row[0]
                rows.append(CellAggregate(
                    row[1],
                    int(row[2]) if row[2] else None,
                    float(row[3]) if row[3] else None,
                    float(row[4]), float(row[5]), int(row[6])))
            except (IndexError, ValueError) as exc:
                raise ValueError(f"{path}: line {lineno}: malformed row") from exc
    if experiment is None:
        raise ValueError(f"{path}: no data rows")
    return experiment, rows
