"""Exact Kalman recursion for the scalar linear-Gaussian model.

Serves as the ground-truth oracle for particle-filter evidence estimates:
for x_t = a*x_{t-1} + v, y_t = x_t + n it computes the exact marginal
log-likelihood log p(y_{1:T}) through the one-step predictive
decomposition.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .numerics import HALF_LOG_2PI


@dataclass(frozen=True)
class KalmanResult:
    log_evidence: float
    filtered_means: np.ndarray  # (T,)
    filtered_vars: np.ndarray   # (T,)


def kalman_filter(a: float, q: float, r: float, x0_mean: float, x0_var: float,
                  observations) -> KalmanResult:
    """Run the scalar Kalman filter and accumulate the exact log-evidence."""
    if q <= 0 or r <= 0:
        raise ValueError(f"noise variances must be positive, got q={q}, r={r}")
    ys = np.asarray(observations, dtype=float).reshape(-1)
    m, p = float(x0_mean), float(x0_var)
    total = 0.0
    means = np.empty(len(ys))
    variances = np.empty(len(ys))
    for j, y in enumerate(ys):
        m_pred = a * m
        p_pred = a * a * p + q
        s = p_pred + r
        innov = y - m_pred
        total += -HALF_LOG_2PI - 0.5 * math.log(s) - 0.5 * innov * innov / s
        gain = p_pred / s
        m = m_pred + gain * innov
        p = (1.0 - gain) * p_pred
        means[j] = m
        variances[j] = p
    return KalmanResult(total, means, variances)


def kalman_log_evidence(a: float, q: float, r: float, x0_mean: float,
                        x0_var: float, observations) -> float:
    """Exact log p(y_{1:T}) for the scalar linear-Gaussian model."""
    return kalman_filter(a, q, r, x0_mean, x0_var, observations).log_evidence
