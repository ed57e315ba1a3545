"""Model-averaged particle filtering with optimization-designed model sets.

Filtering under parameter uncertainty: run K particle filters, one per
candidate parameter value, mix their posteriors by evidence-updated model
probabilities, and choose the K candidates themselves by maximizing
particle-filter evidence estimates over nested prefixes of pre-obtained
observations with a GP-UCB Bayesian optimizer.
"""

__version__ = "0.1.0"

from .models import (DomainError, ModelSpec, Trajectory, exp1_model,
                     exp2_model, linear_gaussian_model, simulate)
from .smc import ParticleCloud, PfResult, propagate, resample, run_pf, weight_and_evidence
from .bma import BmapfRun, BmapfState, init, posterior_mean, run, step, update_log_posteriors
from .gp import GpDataset, GpNumericalError, KernelConfig, gp_posterior, kernel_eval
from .bo import BoConfig, BoResult, maximize, ucb
from .bomsd import DesignResult, MsdPlan, design_model_set, objective_eval, plan
from .kalman import KalmanResult, kalman_filter, kalman_log_evidence
from .bench import (BenchResult, ExperimentConfig, default_bo_config, mse,
                    run_experiment, run_experiment_1, run_experiment_2)

__all__ = [
    "__version__",
    "DomainError", "ModelSpec", "Trajectory", "exp1_model", "exp2_model",
    "linear_gaussian_model", "simulate",
    "ParticleCloud", "PfResult", "propagate", "resample", "run_pf",
    "weight_and_evidence",
    "BmapfRun", "BmapfState", "init", "posterior_mean", "run", "step",
    "update_log_posteriors",
    "GpDataset", "GpNumericalError", "KernelConfig", "gp_posterior", "kernel_eval",
    "BoConfig", "BoResult", "maximize", "ucb",
    "DesignResult", "MsdPlan", "design_model_set", "objective_eval", "plan",
    "KalmanResult", "kalman_filter", "kalman_log_evidence",
    "BenchResult", "ExperimentConfig", "default_bo_config", "mse",
    "run_experiment", "run_experiment_1", "run_experiment_2",
]
