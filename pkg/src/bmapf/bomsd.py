"""Data-driven model set design via Bayesian optimization.

Given m pre-obtained observations, the K model components are built one
at a time: component k is tuned on the nested prefix of the first
m_k = floor(m*(K-k+1)/K) observations, its parameter chosen to maximize
the particle-filter estimate of the prefix's log marginal likelihood.
Shrinking prefixes give the components diversity (they match different
amounts of history) while the per-prefix likelihood maximization keeps
each individually competent.
"""

from __future__ import annotations

import csv
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from ._rng import TAG_BO_QUERY, TAG_DESIGN, derive_seed
from .bo import BoConfig, BoResult, maximize
from .models import ModelSpec
from .smc import run_pf


@dataclass(frozen=True)
class MsdPlan:
    """Sub-dataset layout: component k trains on the first sub_lengths[k-1] points."""

    m: int
    n_components: int
    sub_lengths: tuple

    def __post_init__(self):
        if self.sub_lengths[0] != self.m or self.sub_lengths[-1] < 1:
            raise ValueError("inconsistent sub-dataset lengths")


def plan(m: int, n_components: int) -> MsdPlan:
    """Nested-prefix lengths m_k = floor(m*(K-k+1)/K) for k = 1..K.

    Requires m >= K >= 1 so that even the shortest prefix is non-empty.
    """
    if n_components < 1:
        raise ValueError("need at least one model component")
    if m < n_components:
        raise ValueError(
            f"m={m} observations cannot feed K={n_components} components "
            "(the shortest sub-dataset would be empty)"
        )
    lengths = tuple(m * (n_components - k + 1) // n_components
                    for k in range(1, n_components + 1))
    return MsdPlan(m, n_components, lengths)


def objective_eval(model: ModelSpec, theta, observations, n_particles: int,
                   seed: int) -> float:
    """Log marginal-likelihood estimate of an observation prefix at theta.

    One bootstrap-filter pass; the result is stochastic in the seed, with
    -inf passed through when every step degenerates.
    """
    return run_pf(model, theta, observations, n_particles, seed).log_evidence


@dataclass(frozen=True)
class DesignResult:
    thetas: np.ndarray       # (K, d_theta)
    f_best: np.ndarray       # (K,)
    plan: MsdPlan
    bo_results: tuple        # K BoResults with full histories


def design_model_set(model: ModelSpec, observations, n_components: int,
                     bo_cfg: BoConfig, n_particles: int, seed: int,
                     threads: int = 1) -> DesignResult:
    """Choose K parameter values from pre-obtained observations.

    Component k maximizes the filter-estimated log evidence of the prefix
    y_{1:m_k} over the model's parameter domain.  Every optimizer query
    runs a fresh-seeded filter (the surrogate's noise variance absorbs the
    evaluation noise); seeds derive deterministically from
    ``(seed, component, query index)``.  The K searches are independent
    and run on up to ``threads`` workers without affecting results.
    """
    ys = np.asarray(observations, dtype=float)
    if ys.ndim == 1:
        ys = ys[:, None]
    layout = plan(len(ys), n_components)

    def run_component(k: int) -> BoResult:
        prefix = ys[: layout.sub_lengths[k]]
        counter = {"q": 0}

        def objective(theta):
            q = counter["q"]
            counter["q"] += 1
            return objective_eval(model, theta, prefix, n_particles,
                                  derive_seed(seed, TAG_BO_QUERY, k, q))

        cfg_k = replace(bo_cfg, seed=derive_seed(seed, TAG_DESIGN, k))
        return maximize(objective, model.param_domain, cfg_k)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run_component, range(n_components)))
    else:
        results = [run_component(k) for k in range(n_components)]

    return DesignResult(
        thetas=np.stack([r.theta_best for r in results]),
        f_best=np.array([r.f_best for r in results]),
        plan=layout,
        bo_results=tuple(results),
    )


def write_model_set_csv(path, result: DesignResult) -> None:
    """Designed model set: k,m_k,theta,f_best."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["k", "m_k", "theta", "f_best"])
        for k in range(result.plan.n_components):
            th = result.thetas[k]
            theta = repr(float(th[0])) if len(th) == 1 else ";".join(repr(float(v)) for v in th)
            w.writerow([k + 1, result.plan.sub_lengths[k], theta,
                        repr(float(result.f_best[k]))])


def read_model_set_csv(path) -> np.ndarray:
    """Parameter vectors from a model-set CSV, in component order."""
    thetas = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header[:4]] != ["k", "m_k", "theta", "f_best"]:
            raise ValueError(f"{path}: expected header k,m_k,theta,f_best")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                thetas.append([float(v) for v in row[2].split(";")])
            except (IndexError, ValueError) as exc:
                raise ValueError(f"{path}: line {lineno}: malformed row") from exc
    if not thetas:
        raise ValueError(f"{path}: no model components")
    return np.asarray(thetas, dtype=float)
