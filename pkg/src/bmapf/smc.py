"""Bootstrap particle filter primitives.

Implements the sequential importance resampling cycle for one model
hypothesis: resample, propagate through the transition prior, reweight by
the measurement likelihood.  The per-step normalizing constant of the
weight update is an unbiased estimate of the one-step evidence
p(y_t | y_{1:t-1}); its log is accumulated into the marginal
log-likelihood estimate.

All weight arithmetic is carried out in log space with max-shift
normalization, so likelihoods spanning hundreds of orders of magnitude
(or exact zeros) are handled without under/overflow.  A step whose
likelihood vanishes for every particle keeps the propagated cloud with
uniform weights and records a log-evidence of -inf rather than failing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._rng import TAG_PF_INIT, TAG_PF_STEP, StreamFactory
from .models import ModelSpec


@dataclass(frozen=True)
class ParticleCloud:
    """Weighted particle set for one model hypothesis at one time step.

    ``log_weights`` holds the unnormalized log-weights from the last
    reweighting; ``weights`` holds their normalized counterparts (summing
    to one).
    """

    particles: np.ndarray    # (n, state_dim)
    log_weights: np.ndarray  # (n,)
    weights: np.ndarray      # (n,)

    def __post_init__(self):
        n = len(self.particles)
        if n < 1:
            raise ValueError("a particle cloud needs at least one particle")
        if len(self.log_weights) != n or len(self.weights) != n:
            raise ValueError("particles and weight arrays must have equal length")

    @property
    def n(self) -> int:
        return len(self.particles)

    @classmethod
    def uniform(cls, particles: np.ndarray) -> "ParticleCloud":
        n = len(particles)
        # broadcast views: clouds are immutable, so constant arrays need no storage
        return cls(np.asarray(particles, dtype=float),
                   np.broadcast_to(-math.log(n), (n,)),
                   np.broadcast_to(1.0 / n, (n,)))

    def mean(self) -> np.ndarray:
        """Weighted posterior-mean estimate, shape (state_dim,)."""
        return self.weights @ self.particles


def propagate(cloud: ParticleCloud, model: ModelSpec, theta, t: int,
              rng: np.random.Generator) -> ParticleCloud:
    """Advance every particle through the transition prior; weights unchanged."""
    moved = model.transition(theta, cloud.particles, t, rng)
    return ParticleCloud(moved, cloud.log_weights, cloud.weights)


def weight_and_evidence(cloud: ParticleCloud, model: ModelSpec, theta, y,
                        t: int) -> tuple[ParticleCloud, float]:
    """Reweight a propagated cloud by the likelihood of observation y.

    Returns the reweighted cloud and the log of the evidence estimate
    sum_i w_i * p_theta(y | x_i), computed by log-sum-exp.  The incoming
    weights must be normalized.  If every particle has zero likelihood the
    weights fall back to uniform and the log-evidence is -inf.
    """
    y = np.atleast_1d(np.asarray(y, dtype=float))
    loglik = model.obs_log_density(theta, y, cloud.particles, t)
    peak = np.max(loglik)
    if not np.isfinite(peak):
        # degenerate step: no particle explains the observation
        return ParticleCloud.uniform(cloud.particles), -math.inf
    # Normalize the likelihood scale first: downstream results then depend
    # on the log-likelihoods only through their differences, so a common
    # factor on the likelihood cancels instead of drifting through rounding.
    rel = loglik - peak
    w = cloud.weights
    with np.errstate(divide="ignore"):
        if w.ndim == 1 and w.strides == (0,):  # constant broadcast view
            log_unnorm = math.log(w[0]) + rel
        else:
            log_unnorm = np.log(w) + rel
    shift = np.max(log_unnorm)
    unnorm = np.exp(log_unnorm - shift)
    total = np.sum(unnorm)
    log_evidence = peak + (shift + math.log(total))
    return ParticleCloud(cloud.particles, log_unnorm + peak, unnorm / total), float(log_evidence)


def _resample_indices(weights: np.ndarray, n_out: int, scheme: str,
                      rng: np.random.Generator) -> np.ndarray:
    """Ancestor indices for resampling n_out particles from ``weights``."""
    if np.any(weights < 0):
        raise ValueError("resample weights must be non-negative")
    cum = np.cumsum(weights)
    total = cum[-1]
    if not total > 0:
        raise ValueError("resample weights sum to zero")
    cum /= total
    if scheme == "systematic":
        # grid points (i + u)/n_out against the cumulative weights; counts
        # per particle follow in closed form, no search needed
        edges = np.ceil(n_out * cum - rng.random()).astype(np.intp)
        np.minimum(edges, n_out, out=edges)
        counts = edges.copy()
        counts[1:] -= edges[:-1]
        return np.repeat(np.arange(len(weights)), counts)
    if scheme == "multinomial":
        u = rng.random(n_out)
        u.sort()
        idx = np.searchsorted(cum, u, side="right")
        # guard against cum[-1] rounding below 1
        return np.minimum(idx, len(weights) - 1)
    raise ValueError(f"unknown resampling scheme: {scheme!r}")


def resample(particles: np.ndarray, weights: np.ndarray, n_out: int,
             scheme: str = "systematic",
             rng: np.random.Generator | None = None) -> ParticleCloud:
    """Draw n_out particles from a weighted discrete mixture.

    ``scheme`` is "systematic" (one uniform draw, counts within 1 of
    n_out*w_i) or "multinomial".  Output weights are uniform.  All-zero
    weights raise ValueError: callers must apply their degeneracy fallback
    before resampling.
    """
    if rng is None:
        raise ValueError("resample requires an explicit rng")
    if n_out < 1:
        raise ValueError("n_out must be >= 1")
    particles = np.asarray(particles, dtype=float)
    idx = _resample_indices(np.asarray(weights, dtype=float), n_out, scheme, rng)
    return ParticleCloud.uniform(particles[idx])


def _bootstrap_step(src_particles, src_weights, n_out, model, theta, y, t,
                    rng, scheme):
    """One resample/propagate/reweight cycle on raw arrays.

    The resampled cloud has uniform weights, so the reweighting reduces to
    a softmax of the log-likelihoods.  Returns
    ``(particles, weights, rel_loglik, peak_loglik, log_evidence)`` where
    ``rel_loglik`` is loglik - peak (None on a degenerate step) and
    ``weights`` is a constant broadcast view when degenerate.
    """
    idx = _resample_indices(src_weights, n_out, scheme, rng)
    parts = model.transition(theta, src_particles[idx], t, rng)
    loglik = model.obs_log_density(theta, y, parts, t)
    peak = np.max(loglik)
    if not np.isfinite(peak):
        return parts, np.broadcast_to(1.0 / n_out, (n_out,)), None, float(peak), -math.inf
    rel = loglik - peak
    unnorm = np.exp(rel)
    total = unnorm.sum()
    log_evidence = float(peak) + (math.log(total) - math.log(n_out))
    return parts, unnorm / total, rel, float(peak), log_evidence


@dataclass(frozen=True)
class PfResult:
    log_evidence: float           # total log p(y_{1:T}) estimate
    filtered_means: np.ndarray    # (T, state_dim)
    step_log_evidence: np.ndarray  # (T,)


def run_pf(model: ModelSpec, theta, observations, n: int, seed: int,
           scheme: str = "systematic") -> PfResult:
    """Bootstrap particle filter with resampling at every step.

    ``observations`` has shape (T, obs_dim) (or (T,) for scalar
    observations) and is assumed to start at the model's first observation
    time t0+1.  Returns the accumulated log-evidence estimate and the
    per-step posterior-mean estimates.  Bit-reproducible for a fixed seed.
    """
    th = model.check_theta(theta)
    if n < 1:
        raise ValueError("particle count must be >= 1")
    ys = np.asarray(observations, dtype=float)
    if ys.ndim == 1:
        ys = ys[:, None]
    if len(ys) < 1:
        raise ValueError("need at least one observation")
    factory = StreamFactory(seed)
    parts = model.draw_initial(n, factory.stream(TAG_PF_INIT, 0, 0))
    weights = np.broadcast_to(1.0 / n, (n,))
    total = 0.0
    means = np.empty((len(ys), model.state_dim))
    step_le = np.empty(len(ys))
    for j in range(len(ys)):
        t = model.t0 + 1 + j
        rng = factory.stream(TAG_PF_STEP, 0, j)
        parts, weights, _, _, le = _bootstrap_step(
            parts, weights, n, model, th, ys[j], t, rng, scheme)
        total += le
        step_le[j] = le
        means[j] = weights @ parts
    return PfResult(float(total), means, step_le)
