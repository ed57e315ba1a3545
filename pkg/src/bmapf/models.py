"""State-space model abstraction and the benchmark models.

A model is a pair of conditionals: a state-transition sampler
p_theta(x_t | x_{t-1}) and a measurement log-density p_theta(y_t | x_t),
plus an initial-state rule and a box domain for the parameter theta.
Transitions and densities are vectorized over particles: states are
arrays of shape (n, state_dim).

Two nonlinear benchmark models are provided (``exp1_model`` with
absolute-value dynamics and a log-square measurement, ``exp2_model``
with seasonal dynamics, gamma process noise and an outlier-mixture
measurement), along with a linear-Gaussian model used as an exact-filter
test oracle.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np

from ._rng import TAG_SIMULATE, stream
from .numerics import HALF_LOG_2PI


class DomainError(ValueError):
    """A parameter or configuration value lies outside its allowed domain."""


InitialState = Union[np.ndarray, Callable[[int, np.random.Generator], np.ndarray]]


@dataclass(frozen=True)
class ModelSpec:
    """A parameterized state-space model.

    Attributes
    ----------
    name : str
        Human-readable identifier, also used by the CLI.
    param_domain : ndarray, shape (d_theta, 2)
        Axis-aligned box of admissible parameter values (lower, upper).
    state_dim, obs_dim : int
        Dimensions of the state and observation vectors.
    initial_state : ndarray or callable
        Either a fixed state vector of shape (state_dim,) or a sampler
        ``f(n, rng) -> (n, state_dim)``.
    transition : callable
        ``f(theta, x, t, rng) -> x_new`` drawing x_t given x_{t-1} = x;
        vectorized over the particle axis of ``x`` with shape (n, state_dim).
        ``t`` is the time index of the new state (transitions may depend
        on it).
    obs_log_density : callable
        ``f(theta, y, x, t) -> (n,)`` log p_theta(y | x) per particle.
        Must return finite values or -inf, never NaN.
    obs_sample : callable
        ``f(theta, x, t, rng) -> (n, obs_dim)`` measurement sampler, used
        only for data generation.
    t0 : int
        Time index of the initial state; observations run t0+1, t0+2, ...
    """

    name: str
    param_domain: np.ndarray
    state_dim: int
    obs_dim: int
    initial_state: InitialState
    transition: Callable
    obs_log_density: Callable
    obs_sample: Callable
    t0: int = 0

    def __post_init__(self):
        dom = np.atleast_2d(np.asarray(self.param_domain, dtype=float))
        if dom.shape[1] != 2:
            raise DomainError("param_domain must have shape (d_theta, 2)")
        if np.any(dom[:, 0] > dom[:, 1]):
            raise DomainError("param_domain lower bounds exceed upper bounds")
        object.__setattr__(self, "param_domain", dom)

    @property
    def param_dim(self) -> int:
        return self.param_domain.shape[0]

    def check_theta(self, theta) -> np.ndarray:
        """Validate and normalize a parameter vector; raise DomainError."""
        th = np.atleast_1d(np.asarray(theta, dtype=float))
        if th.shape != (self.param_dim,):
            raise DomainError(
                f"theta has shape {th.shape}, expected ({self.param_dim},)"
            )
        lo, hi = self.param_domain[:, 0], self.param_domain[:, 1]
        if np.any(th < lo) or np.any(th > hi):
            raise DomainError(
                f"theta {th.tolist()} outside domain {self.param_domain.tolist()}"
            )
        return th

    def draw_initial(self, n: int, rng: np.random.Generator) -> np.ndarray:
        """n draws from the initial-state rule, shape (n, state_dim)."""
        if callable(self.initial_state):
            x0 = np.asarray(self.initial_state(n, rng), dtype=float)
            return x0.reshape(n, self.state_dim)
        fixed = np.asarray(self.initial_state, dtype=float).reshape(self.state_dim)
        return np.tile(fixed, (n, 1))


@dataclass(frozen=True)
class Trajectory:
    """Simulated ground-truth states and observations.

    ``states`` excludes the initial condition: row j holds the state at
    time t0+1+j, aligned with ``observations`` row j.
    """

    states: np.ndarray      # (T, state_dim)
    observations: np.ndarray  # (T, obs_dim)
    true_param: np.ndarray  # (d_theta,)
    seed: int
    t0: int = 0

    def __post_init__(self):
        if len(self.states) != len(self.observations):
            raise ValueError("states and observations must have equal length")
        if len(self.states) < 1:
            raise ValueError("trajectory must contain at least one step")

    def __len__(self) -> int:
        return len(self.states)


def simulate(model: ModelSpec, theta, T: int, seed: int) -> Trajectory:
    """Draw a length-T trajectory from the model at parameter theta.

    Bit-reproducible for a fixed seed.  Raises DomainError if theta lies
    outside the model's parameter domain or T < 1.
    """
    th = model.check_theta(theta)
    if T < 1:
        raise DomainError(f"T must be >= 1, got {T}")
    rng = stream(seed, TAG_SIMULATE)
    x = model.draw_initial(1, rng)
    states = np.empty((T, model.state_dim))
    obs = np.empty((T, model.obs_dim))
    for j in range(T):
        t = model.t0 + 1 + j
        x = model.transition(th, x, t, rng)
        states[j] = x[0]
        obs[j] = model.obs_sample(th, x, t, rng)[0]
    return Trajectory(states, obs, th, int(seed), model.t0)


# ---------------------------------------------------------------------------
# Benchmark model 1: x_t = theta*|x_{t-1}| + v_t,  y_t = log(x_t^2) + u_t
# ---------------------------------------------------------------------------

def _exp1_transition(theta, x, t, rng):
    return theta[0] * np.abs(x) + rng.standard_normal(x.shape)


def _exp1_obs_log_density(theta, y, x, t):
    with np.errstate(divide="ignore"):
        r = y[0] - np.log(x[:, 0] * x[:, 0])
    # x == 0 gives r = +inf and a log-density of -inf (zero likelihood)
    return -HALF_LOG_2PI - 0.5 * r * r


def _exp1_obs_sample(theta, x, t, rng):
    with np.errstate(divide="ignore"):
        return np.log(x * x) + rng.standard_normal(x.shape)


def exp1_model() -> ModelSpec:
    """First benchmark model.

    One-dimensional dynamics x_t = theta*|x_{t-1}| + v_t with v_t ~ N(0,1),
    measurement y_t = log(x_t^2) + u_t with u_t ~ N(0,1), x_0 = 0 fixed,
    and theta in [0, 1].
    """
    return ModelSpec(
        name="exp1",
        param_domain=[[0.0, 1.0]],
        state_dim=1,
        obs_dim=1,
        initial_state=np.array([0.0]),
        transition=_exp1_transition,
        obs_log_density=_exp1_obs_log_density,
        obs_sample=_exp1_obs_sample,
        t0=0,
    )


# ---------------------------------------------------------------------------
# Benchmark model 2: seasonal dynamics, gamma noise, outlier mixture
# ---------------------------------------------------------------------------

# Measurement-noise mixture: with probability Po the noise is an outlier
# drawn from 0.5*N(20, 0.1) + 0.5*N(22, 0.1); otherwise N(0, 0.01).
# The second Gaussian parameters are variances.
_EXP2_OUT_NORM = -HALF_LOG_2PI - 0.5 * math.log(0.1)
_EXP2_CLEAN_NORM = -HALF_LOG_2PI - 0.5 * math.log(0.01)

_GAMMA_SHAPE = 3.0
_GAMMA_SCALE = 2.0


def exp2_seasonal_mean(t):
    """Deterministic transition input 1 + sin(4*pi*mod(t,60)/100) at time t."""
    return 1.0 + np.sin(4.0 * np.pi * (np.asarray(t) % 60) / 100.0)


def exp2_obs_mean(x, t):
    """Piecewise measurement mean: 0.2x^2 early in each 60-step cycle, else 0.2x - 2."""
    if t % 60 <= 30:
        return 0.2 * x * x
    return 0.2 * x - 2.0


def _exp2_transition(theta, x, t, rng):
    seasonal = 1.0 + math.sin(4.0 * math.pi * (t % 60) / 100.0)
    return seasonal + 0.5 * x + rng.gamma(_GAMMA_SHAPE, _GAMMA_SCALE, x.shape)


def _exp2_obs_log_density(theta, y, x, t):
    po = theta[0]
    r = y[0] - exp2_obs_mean(x[:, 0], t)
    log_out = math.log(0.5 * po) if po > 0 else -math.inf
    log_clean = math.log(1.0 - po) if po < 1 else -math.inf
    d1 = r - 20.0
    d2 = r - 22.0
    a1 = (log_out + _EXP2_OUT_NORM) - 5.0 * d1 * d1
    a2 = (log_out + _EXP2_OUT_NORM) - 5.0 * d2 * d2
    a3 = (log_clean + _EXP2_CLEAN_NORM) - 50.0 * r * r
    peak = np.maximum(np.maximum(a1, a2), a3)
    # peak can be -inf only if a mixture weight is zero and the other
    # component is hundreds of sigmas away; keep the -inf, avoid NaN
    safe = np.where(np.isfinite(peak), peak, 0.0)
    with np.errstate(divide="ignore"):
        out = safe + np.log(np.exp(a1 - safe) + np.exp(a2 - safe) + np.exp(a3 - safe))
    return np.where(np.isfinite(peak), out, -np.inf)


def _exp2_obs_sample(theta, x, t, rng):
    po = theta[0]
    n = x.shape[0]
    outlier = rng.random(n) < po
    which = rng.random(n) < 0.5
    mean = np.where(outlier, np.where(which, 20.0, 22.0), 0.0)
    sd = np.where(outlier, math.sqrt(0.1), math.sqrt(0.01))
    noise = mean + sd * rng.standard_normal(n)
    return exp2_obs_mean(x, t) + noise[:, None]


def exp2_model() -> ModelSpec:
    """Second benchmark model.

    One-dimensional seasonal dynamics
    x_t = 1 + sin(4*pi*mod(t,60)/100) + 0.5*x_{t-1} + u_t with
    u_t ~ Gamma(shape=3, scale=2), x_1 = 1 fixed, and a measurement whose
    mean is 0.2x^2 while mod(t,60) <= 30 and 0.2x - 2 otherwise.  The
    unknown parameter is the outlier probability Po in [0, 1]: measurement
    noise is an outlier (mixture of N(20,0.1) and N(22,0.1)) with
    probability Po and N(0,0.01) otherwise.
    """
    return ModelSpec(
        name="exp2",
        param_domain=[[0.0, 1.0]],
        state_dim=1,
        obs_dim=1,
        initial_state=np.array([1.0]),
        transition=_exp2_transition,
        obs_log_density=_exp2_obs_log_density,
        obs_sample=_exp2_obs_sample,
        t0=1,
    )


# ---------------------------------------------------------------------------
# Linear-Gaussian model (exact-filter oracle)
# ---------------------------------------------------------------------------

def linear_gaussian_model(a: float, q: float, r: float,
                          x0_mean: float = 0.0, x0_var: float = 1.0) -> ModelSpec:
    """AR(1) model with Gaussian noise: x_t = theta*x_{t-1} + v, y_t = x_t + n.

    v ~ N(0, q), n ~ N(0, r), x_0 ~ N(x0_mean, x0_var).  The runtime
    parameter theta is the transition coefficient; ``a`` anchors the
    parameter domain, which always covers [-2, 2].  Used only against the
    Kalman recursion oracle.
    """
    if q <= 0 or r <= 0:
        raise DomainError(f"noise variances must be positive, got q={q}, r={r}")
    if x0_var < 0:
        raise DomainError(f"x0_var must be non-negative, got {x0_var}")
    bound = max(2.0, abs(a))
    sq, sr, s0 = math.sqrt(q), math.sqrt(r), math.sqrt(x0_var)
    log_norm = -HALF_LOG_2PI - 0.5 * math.log(r)

    def transition(theta, x, t, rng):
        return theta[0] * x + sq * rng.standard_normal(x.shape)

    def obs_log_density(theta, y, x, t):
        d = y[0] - x[:, 0]
        return log_norm - 0.5 * d * d / r

    def obs_sample(theta, x, t, rng):
        return x + sr * rng.standard_normal(x.shape)

    def initial(n, rng):
        return x0_mean + s0 * rng.standard_normal((n, 1))

    return ModelSpec(
        name=f"linear_gaussian(a={a},q={q},r={r})",
        param_domain=[[-bound, bound]],
        state_dim=1,
        obs_dim=1,
        initial_state=np.array([x0_mean]) if x0_var == 0 else initial,
        transition=transition,
        obs_log_density=obs_log_density,
        obs_sample=obs_sample,
        t0=0,
    )


# ---------------------------------------------------------------------------
# Trajectory CSV serialization (header: t,x,y)
# ---------------------------------------------------------------------------

def write_trajectory_csv(path, traj: Trajectory) -> None:
    """Write a 1-D trajectory as `t,x,y` rows with round-trip precision."""
    if traj.states.shape[1] != 1 or traj.observations.shape[1] != 1:
        raise ValueError("CSV serialization is defined for 1-D trajectories")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "x", "y"])
        for j in range(len(traj)):
            w.writerow([traj.t0 + 1 + j,
                        repr(float(traj.states[j, 0])),
                        repr(float(traj.observations[j, 0]))])


def read_trajectory_csv(path):
    """Read a `t,x,y` (or `t,y`) CSV.

    Returns (t, states, observations) where states is None when the file
    carries no ground-truth column.  Raises ValueError naming the first
    malformed line.
    """
    ts, xs, ys = [], [], []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise ValueError(f"{path}: empty CSV")
        header = [h.strip() for h in header]
        if header == ["t", "x", "y"]:
            has_x = True
        elif header == ["t", "y"]:
            has_x = False
        else:
            raise ValueError(f"{path}: line 1: expected header t,x,y or t,y")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                ts.append(int(row[0]))
                if has_x:
                    x_field = row[1].strip()
                    xs.append(float(x_field) if x_field else math.nan)
                    ys.append(float(row[2]))
                else:
                    ys.append(float(row[1]))
            except (IndexError, ValueError) as exc:
                raise ValueError(f"{path}: line {lineno}: malformed row") from exc
    if not ts:
        raise ValueError(f"{path}: no data rows")
    t = np.asarray(ts, dtype=int)
    y = np.asarray(ys, dtype=float)[:, None]
    if has_x and not np.all(np.isnan(xs)):
        return t, np.asarray(xs, dtype=float)[:, None], y
    return t, None, y
