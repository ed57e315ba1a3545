"""Gaussian-process regression for the optimization surrogate.

Closed-form predictive equations with a Gaussian (squared-exponential)
kernel by default; Matern-5/2 is available.  The Gram matrix carries the
observation-noise variance plus an escalating diagonal jitter, and all
solves go through a Cholesky factorization, never an explicit inverse.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy.linalg import cho_solve, cholesky, solve_triangular


class GpNumericalError(RuntimeError):
    """Cholesky factorization failed even after jitter escalation."""


@dataclass(frozen=True)
class KernelConfig:
    """Stationary kernel with per-dimension length scales.

    ``signal_variance`` scales k(x, x); ``noise_variance`` is the variance
    of the observation noise on function evaluations and enters the Gram
    diagonal only.
    """

    length_scales: np.ndarray
    signal_variance: float = 1.0
    noise_variance: float = 0.0
    kind: str = "gaussian"

    def __post_init__(self):
        ls = np.atleast_1d(np.asarray(self.length_scales, dtype=float))
        if np.any(ls <= 0):
            raise ValueError("length scales must be positive")
        if self.signal_variance <= 0:
            raise ValueError("signal_variance must be positive")
        if self.noise_variance < 0:
            raise ValueError("noise_variance must be non-negative")
        if self.kind not in ("gaussian", "matern52"):
            raise ValueError(f"unknown kernel kind: {self.kind!r}")
        object.__setattr__(self, "length_scales", ls)


def gram(cfg: KernelConfig, a: np.ndarray, b: np.ndarray | None = None) -> np.ndarray:
    """Kernel matrix k(a_i, b_j); symmetric when b is omitted."""
    a = np.atleast_2d(np.asarray(a, dtype=float)) / cfg.length_scales
    b = a if b is None else np.atleast_2d(np.asarray(b, dtype=float)) / cfg.length_scales
    diff = a[:, None, :] - b[None, :, :]
    sq = np.sum(diff * diff, axis=-1)
    if cfg.kind == "gaussian":
        return cfg.signal_variance * np.exp(-0.5 * sq)
    d = np.sqrt(5.0 * sq)
    return cfg.signal_variance * (1.0 + d + d * d / 3.0) * np.exp(-d)


def kernel_eval(cfg: KernelConfig, x, y) -> float:
    """Kernel value k(x, y) for two parameter vectors."""
    return float(gram(cfg, np.atleast_1d(x)[None, :], np.atleast_1d(y)[None, :])[0, 0])


@dataclass(frozen=True)
class GpDataset:
    """Evaluation history: points, values, kernel, constant prior mean."""

    points: np.ndarray   # (n, d)
    values: np.ndarray   # (n,)
    kernel: KernelConfig
    mean: float = 0.0

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, dtype=float))
        vals = np.asarray(self.values, dtype=float).reshape(-1)
        if len(pts) != len(vals):
            raise ValueError("points and values must have equal length")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "values", vals)

    def __len__(self) -> int:
        return len(self.values)

    def append(self, point, value) -> "GpDataset":
        pt = np.atleast_1d(np.asarray(point, dtype=float))[None, :]
        return GpDataset(np.concatenate([self.points, pt]),
                         np.append(self.values, float(value)),
                         self.kernel, self.mean)


def _chol_with_jitter(k_matrix: np.ndarray, signal_variance: float) -> np.ndarray:
    """Lower Cholesky factor, escalating diagonal jitter up to 1e-4*sv."""
    jitter = 1e-10 * signal_variance
    for _ in range(7):
        try:
            return cholesky(k_matrix + jitter * np.eye(len(k_matrix)), lower=True)
        except np.linalg.LinAlgError:
            jitter *= 10.0
    raise GpNumericalError(
        f"Gram matrix not positive definite after jitter escalation to {jitter / 10:.1e}"
    )


def gp_posterior_batch(data: GpDataset, queries: np.ndarray):
    """Predictive means and variances at several query points.

    Returns ``(means, variances)`` arrays; variances are clamped at zero.
    Raises GpNumericalError when the noisy Gram matrix cannot be factored.
    """
    queries = np.atleast_2d(np.asarray(queries, dtype=float))
    cfg = data.kernel
    k_train = gram(cfg, data.points)
    k_train[np.diag_indices_from(k_train)] += cfg.noise_variance
    low = _chol_with_jitter(k_train, cfg.signal_variance)
    resid = data.values - data.mean
    alpha = cho_solve((low, True), resid)
    k_cross = gram(cfg, data.points, queries)
    means = data.mean + k_cross.T @ alpha
    half = solve_triangular(low, k_cross, lower=True)
    variances = cfg.signal_variance - np.sum(half * half, axis=0)
    return means, np.maximum(variances, 0.0)


def gp_posterior(data: GpDataset, query) -> tuple[float, float]:
    """Predictive mean and variance of the latent function at one point."""
    means, variances = gp_posterior_batch(data, np.atleast_1d(query)[None, :])
    return float(means[0]), float(variances[0])


class StandardizedGp:
    """GP fit on standardized values, de-standardized at prediction time.

    Evaluation objectives (e.g. log-evidence estimates) can sit thousands
    of units away from zero, where a zero-mean prior is meaningless.  This
    wrapper centers and scales the values before fitting and maps
    predictions back.  ``noise_variance`` in the kernel config is
    interpreted on the raw value scale; ``signal_variance`` applies to the
    standardized scale.
    """

    def __init__(self, points, values, kernel: KernelConfig):
        values = np.asarray(values, dtype=float).reshape(-1)
        self._shift = float(np.mean(values)) if len(values) else 0.0
        scale = float(np.std(values)) if len(values) else 1.0
        self._scale = scale if scale > 0 else 1.0
        std_kernel = replace(kernel,
                             noise_variance=kernel.noise_variance / self._scale**2)
        self._data = GpDataset(points, (values - self._shift) / self._scale,
                               std_kernel, mean=0.0)

    def posterior(self, queries):
        means, variances = gp_posterior_batch(self._data, queries)
        return (self._shift + self._scale * means,
                self._scale**2 * variances)
