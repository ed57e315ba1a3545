"""Model-averaged particle filtering over K parameter hypotheses.

Runs K particle filters in parallel, one per candidate parameter value,
and maintains posterior probabilities over the hypotheses.  Each step,
every filter resamples its particles from the K-model mixture posterior
(particles migrate between hypotheses), propagates them under its own
parameter, and reweights against the new observation.  The per-model
evidence estimates then update the model posterior by Bayes' rule:

    post_k  proportional to  prior_k * evidence_k

computed in log space.  The combined state estimate is the
posterior-probability-weighted mixture mean over all K weighted clouds.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, replace

import numpy as np

from ._rng import TAG_PF_INIT, TAG_PF_STEP, StreamFactory, stream
from .models import ModelSpec
from .numerics import LOG_TINY
from .smc import ParticleCloud, _bootstrap_step

# Linear-scale floor for model posteriors: prevents permanent lock-out of a
# hypothesis after an outlier step.  Inactive in non-degenerate runs.
LOG_POSTERIOR_FLOOR = math.log(1e-300)


def update_log_posteriors(log_posteriors, step_log_evidence) -> np.ndarray:
    """Bayes update of log model posteriors from per-model log evidence.

    The evidence vector is normalized by its maximum before mixing, so the
    result depends on the evidences only through their differences: a
    common positive factor on all evidences cancels.  -inf evidences are
    floored at the log of the smallest positive double, and the updated
    posteriors are floored at 1e-300 (renormalizing only when the floor
    binds).
    """
    log_post = np.asarray(log_posteriors, dtype=float)
    ll = np.asarray(step_log_evidence, dtype=float).copy()
    ll[np.isneginf(ll)] = LOG_TINY
    rel = ll - np.max(ll)
    s = log_post + rel
    out = s - _sorted_logsumexp(s)
    if np.any(out < LOG_POSTERIOR_FLOOR):
        out = np.maximum(out, LOG_POSTERIOR_FLOOR)
        out = out - _sorted_logsumexp(out)
    return out


def _sorted_logsumexp(s: np.ndarray) -> float:
    # summing in sorted order makes the result independent of model labeling
    shift = np.max(s)
    return float(shift + math.log(np.sum(np.sort(np.exp(s - shift)))))


@dataclass(frozen=True)
class BmapfState:
    """Filter state: K weighted clouds plus log model posteriors at time t."""

    model: ModelSpec
    thetas: np.ndarray           # (K, d_theta)
    clouds: tuple                # K ParticleClouds
    log_posteriors: np.ndarray   # (K,)
    t: int                       # time index of the current state
    seed: int                    # root of the per-model, per-step streams
    stream_ids: tuple            # per-model substream indices
    scheme: str = "systematic"
    resample_source: str = "mixture"

    @property
    def n_models(self) -> int:
        return len(self.clouds)

    @property
    def steps_done(self) -> int:
        return self.t - self.model.t0


def init(model: ModelSpec, thetas, n_per_model, seed: int,
         prior_x0=None, scheme: str = "systematic",
         resample_source: str = "mixture", stream_ids=None) -> BmapfState:
    """Initialize the K-model filter with uniform model priors.

    ``n_per_model`` is an int or a length-K sequence of particle counts.
    ``prior_x0`` overrides the model's initial-state rule (fixed vector or
    sampler).  Duplicate parameter values are permitted but warned about.
    ``stream_ids`` pins the per-model RNG substream indices (defaults to
    0..K-1); permuting models together with their stream ids permutes the
    run exactly.
    """
    thetas = np.atleast_2d(np.asarray(thetas, dtype=float))
    K = len(thetas)
    for th in thetas:
        model.check_theta(th)
    if len(np.unique(thetas, axis=0)) < K:
        warnings.warn("duplicate parameter values in the model set", stacklevel=2)
    counts = np.broadcast_to(np.asarray(n_per_model, dtype=int), (K,))
    if np.any(counts < 1):
        raise ValueError("per-model particle counts must be >= 1")
    if resample_source not in ("mixture", "self"):
        raise ValueError(f"unknown resample source: {resample_source!r}")
    if stream_ids is None:
        stream_ids = tuple(range(K))
    else:
        stream_ids = tuple(int(s) for s in stream_ids)
        if len(stream_ids) != K:
            raise ValueError("stream_ids must have one entry per model")

    if prior_x0 is None:
        draw = model.draw_initial
    elif callable(prior_x0):
        def draw(n, rng):
            return np.asarray(prior_x0(n, rng), dtype=float).reshape(n, model.state_dim)
    else:
        fixed = np.asarray(prior_x0, dtype=float).reshape(model.state_dim)

        def draw(n, rng):
            return np.tile(fixed, (n, 1))

    clouds = tuple(
        ParticleCloud.uniform(draw(int(counts[k]), stream(seed, TAG_PF_INIT, stream_ids[k], 0)))
        for k in range(K)
    )
    return BmapfState(
        model=model,
        thetas=thetas,
        clouds=clouds,
        log_posteriors=np.full(K, -math.log(K)),
        t=model.t0,
        seed=int(seed),
        stream_ids=stream_ids,
        scheme=scheme,
        resample_source=resample_source,
    )


def _step_impl(state: BmapfState, y, factory: StreamFactory):
    model = state.model
    K = state.n_models
    t = state.t + 1
    j = state.steps_done
    y = np.atleast_1d(np.asarray(y, dtype=float))

    if state.resample_source == "mixture":
        src_particles = np.concatenate([c.particles for c in state.clouds])
        src_weights = np.concatenate([
            math.exp(state.log_posteriors[k]) * state.clouds[k].weights
            for k in range(K)
        ])
        if K > 1:
            # canonical value order makes the mixture independent of model
            # labeling, so permuting model order permutes the run exactly
            order = np.lexsort(src_particles.T[::-1])
            src_particles = src_particles[order]
            src_weights = src_weights[order]

    new_clouds = []
    log_evidence = np.empty(K)
    for k in range(K):
        n_k = state.clouds[k].n
        rng = factory.stream(TAG_PF_STEP, state.stream_ids[k], j)
        if state.resample_source == "mixture":
            src_p, src_w = src_particles, src_weights
        else:
            src_p, src_w = state.clouds[k].particles, state.clouds[k].weights
        parts, weights, rel, peak, le = _bootstrap_step(
            src_p, src_w, n_k, model, state.thetas[k], y, t, rng, state.scheme)
        if rel is None:
            cloud = ParticleCloud.uniform(parts)
        else:
            cloud = ParticleCloud(parts, (peak - math.log(n_k)) + rel, weights)
        new_clouds.append(cloud)
        log_evidence[k] = le

    degenerate = bool(np.all(np.isneginf(log_evidence)))
    if degenerate:
        log_post = state.log_posteriors
    else:
        log_post = update_log_posteriors(state.log_posteriors, log_evidence)
    new_state = replace(state, clouds=tuple(new_clouds), log_posteriors=log_post, t=t)
    return new_state, log_evidence, degenerate


def step(state: BmapfState, y) -> tuple[BmapfState, np.ndarray, bool]:
    """Advance the filter by one observation.

    Returns ``(new_state, step_log_evidence, degenerate)`` where
    ``step_log_evidence`` holds the per-model log evidence of ``y`` and
    ``degenerate`` marks a step on which every model had zero likelihood
    (model posteriors are then left unchanged and the clouds keep their
    propagated particles with uniform weights).
    """
    return _step_impl(state, y, StreamFactory(state.seed))


def posterior_mean(state: BmapfState) -> np.ndarray:
    """Mixture posterior mean over all models, shape (state_dim,)."""
    out = np.zeros(state.model.state_dim)
    for k in range(state.n_models):
        out = out + math.exp(state.log_posteriors[k]) * state.clouds[k].mean()
    return out


@dataclass(frozen=True)
class BmapfRun:
    estimates: np.ndarray        # (T, state_dim) posterior-mean estimates
    posterior_trace: np.ndarray  # (T, K) model posteriors after each step
    log_evidence_trace: np.ndarray  # (T, K) per-model step log evidence
    degenerate_steps: tuple      # observation indices with all-zero likelihood


def run(model: ModelSpec, thetas, observations, n_per_model, seed: int,
        prior_x0=None, scheme: str = "systematic",
        resample_source: str = "mixture") -> BmapfRun:
    """Run the model-averaged filter over a full observation sequence."""
    ys = np.asarray(observations, dtype=float)
    if ys.ndim == 1:
        ys = ys[:, None]
    state = init(model, thetas, n_per_model, seed, prior_x0=prior_x0,
                 scheme=scheme, resample_source=resample_source)
    factory = StreamFactory(state.seed)
    T, K = len(ys), state.n_models
    estimates = np.empty((T, model.state_dim))
    post_trace = np.empty((T, K))
    le_trace = np.empty((T, K))
    degenerate = []
    for jj, y in enumerate(ys):
        state, le, degen = _step_impl(state, y, factory)
        estimates[jj] = posterior_mean(state)
        post_trace[jj] = np.exp(state.log_posteriors)
        le_trace[jj] = le
        if degen:
            degenerate.append(jj)
    return BmapfRun(estimates, post_trace, le_trace, tuple(degenerate))


def write_diagnostics_csv(path, run_result: BmapfRun, t0: int = 0) -> None:
    """Per-step diagnostic log: t,estimate,pi_1..pi_K,logL_1..logL_K."""
    T, K = run_result.posterior_trace.shape
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "estimate"]
                   + [f"pi_{k + 1}" for k in range(K)]
                   + [f"logL_{k + 1}" for k in range(K)])
        for j in range(T):
            w.writerow([t0 + 1 + j, repr(float(run_result.estimates[j, 0]))]
                       + [repr(float(v)) for v in run_result.posterior_trace[j]]
                       + [repr(float(v)) for v in run_result.log_evidence_trace[j]])
