import numpy as np

from bmapf.models import ModelSpec


def stub_model(loglik_of_state, loglik_of_state_t=None):
    """Identity-transition model with a controlled measurement log-density.

    ``loglik_of_state`` maps the (n,) state column to per-particle
    log-likelihoods; the time-dependent variant takes (states, t).
    """
    if loglik_of_state_t is None:
        def density(th, y, x, t):
            return loglik_of_state(x[:, 0])
    else:
        def density(th, y, x, t):
            return loglik_of_state_t(x[:, 0], t)
    return ModelSpec(
        name="stub",
        param_domain=[[0.0, 1.0]],
        state_dim=1,
        obs_dim=1,
        initial_state=np.array([0.0]),
        transition=lambda th, x, t, rng: x,
        obs_log_density=density,
        obs_sample=lambda th, x, t, rng: x,
    )
