"""Bayesian optimization with an upper-confidence-bound acquisition rule.

Maximizes an expensive, possibly noisy objective over a box domain: fit a
GP surrogate to the evaluations made so far, pick the next query as the
argmax of mean + alpha*stddev over a fresh uniform candidate grid,
evaluate, repeat until the evaluation budget is spent.  The returned
optimum is the incumbent with the highest observed value.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from ._rng import TAG_BO, stream
from .gp import GpDataset, KernelConfig, StandardizedGp


class BoEvaluationError(RuntimeError):
    """Objective kept returning NaN after the retry budget was exhausted."""


@dataclass(frozen=True)
class BoConfig:
    """Optimizer settings.

    ``alpha`` trades off exploration against exploitation in the
    acquisition rule; ``budget`` caps total objective evaluations;
    ``n_init`` of those go to a stratified initial design; each iteration
    maximizes the acquisition over ``acq_grid`` fresh uniform candidates.
    """

    kernel: KernelConfig
    budget: int = 40
    n_init: int = 5
    acq_grid: int = 512
    alpha: float = 2.0
    seed: int = 0

    def __post_init__(self):
        if self.alpha < 0:
            raise ValueError("alpha must be non-negative")
        # budget == n_init is the degenerate initial-design-only case
        if not 0 < self.n_init <= self.budget:
            raise ValueError("need 0 < n_init <= budget")
        if self.acq_grid < 2:
            raise ValueError("acq_grid must be >= 2")


def ucb(mean: float, stddev: float, alpha: float) -> float:
    """Upper confidence bound mean + alpha*stddev."""
    return mean + alpha * stddev


@dataclass(frozen=True)
class BoResult:
    theta_best: np.ndarray
    f_best: float
    history: GpDataset   # evaluations in query order (-inf values clamped)
    n_init: int


def _initial_design(domain: np.ndarray, n: int, rng: np.random.Generator) -> np.ndarray:
    """Jittered-grid (Latin hypercube) design of n points in the box."""
    d = len(domain)
    u = (rng.random((n, d)) + np.stack([rng.permutation(n) for _ in range(d)], axis=1)) / n
    return domain[:, 0] + u * (domain[:, 1] - domain[:, 0])


def _evaluate(objective, point, domain, rng) -> tuple[np.ndarray, float]:
    """Evaluate the objective, redrawing the point on NaN (3 retries)."""
    for attempt in range(4):
        value = float(objective(np.asarray(point, dtype=float)))
        if not math.isnan(value):
            return np.asarray(point, dtype=float), value
        if attempt == 3:
            break
        point = domain[:, 0] + rng.random(len(domain)) * (domain[:, 1] - domain[:, 0])
    raise BoEvaluationError("objective returned NaN for 4 consecutive points")


def _clamp_neg_inf(values: list[float]) -> np.ndarray:
    """Replace -inf entries by (min finite value - 100) for GP fitting."""
    arr = np.asarray(values, dtype=float)
    neg = np.isneginf(arr)
    if np.any(neg):
        finite = arr[np.isfinite(arr)]
        base = float(finite.min()) if len(finite) else 0.0
        arr[neg] = base - 100.0
    return arr


def maximize(objective, domain, cfg: BoConfig) -> BoResult:
    """Maximize ``objective`` over the box ``domain`` (shape (d, 2)).

    Runs ``cfg.n_init`` space-filling evaluations, then UCB-driven queries
    until ``cfg.budget`` evaluations total.  Returns the best observed
    point, its value, and the full evaluation history.
    """
    domain = np.atleast_2d(np.asarray(domain, dtype=float))
    if domain.shape[1] != 2 or np.any(domain[:, 0] >= domain[:, 1]):
        raise ValueError("domain must be a non-degenerate (d, 2) box")
    rng = stream(cfg.seed, TAG_BO)

    points: list[np.ndarray] = []
    values: list[float] = []
    for pt in _initial_design(domain, min(cfg.n_init, cfg.budget), rng):
        pt, val = _evaluate(objective, pt, domain, rng)
        points.append(pt)
        values.append(val)

    while len(values) < cfg.budget:
        fit = StandardizedGp(np.stack(points), _clamp_neg_inf(values), cfg.kernel)
        cand = domain[:, 0] + rng.random((cfg.acq_grid, len(domain))) * (
            domain[:, 1] - domain[:, 0])
        means, variances = fit.posterior(cand)
        acq = means + cfg.alpha * np.sqrt(variances)
        pt, val = _evaluate(objective, cand[int(np.argmax(acq))], domain, rng)
        points.append(pt)
        values.append(val)

    stored = _clamp_neg_inf(values)
    best = int(np.argmax(stored))
    history = GpDataset(np.stack(points), stored, cfg.kernel)
    return BoResult(points[best], float(stored[best]), history, min(cfg.n_init, cfg.budget))


def write_history_csv(path, result: BoResult) -> None:
    """Evaluation log: iter,theta,f_value,is_incumbent."""
    best = -math.inf
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["iter", "theta", "f_value", "is_incumbent"])
        for i, (pt, val) in enumerate(zip(result.history.points, result.history.values)):
            incumbent = int(val > best)
            best = max(best, val)
            theta = repr(float(pt[0])) if len(pt) == 1 else ";".join(repr(float(v)) for v in pt)
            w.writerow([i, theta, repr(float(val)), incumbent])
