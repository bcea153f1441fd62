"""Sequential global optimization with Gaussian processes.

GP-MI, GP-UCB and expected improvement over finite candidate grids, a
seeded benchmark harness with CSV output, and Monte Carlo checks of the
regret analysis.
"""
from .errors import ConfigError, GPOptError, InputError, NumericalError, UsageError
from .gp import (PosteriorState, extend_posterior, fit_posterior, fit_regret_posterior,
                 posterior_covariance, posterior_mean, posterior_variance, sample_gp)
from .harness import (ExperimentConfig, RegretTrace, aggregate, estimate_hyperparams,
                      export_csv, read_csv, run_experiment, run_trial)
from .info import InfoAccumulator, accumulate, c1, greedy_gamma_bound, mutual_information
from .kernels import Kernel, kernel_eval
from .objectives import Objective, evaluate_noisy
from .objectives import build as build_objective
from .policies import KINDS, Policy, observe, select_next

__version__ = "0.1.0"

__all__ = [
    "ConfigError", "GPOptError", "InputError", "NumericalError", "UsageError",
    "PosteriorState", "extend_posterior", "fit_posterior", "fit_regret_posterior",
    "posterior_covariance", "posterior_mean", "posterior_variance", "sample_gp",
    "ExperimentConfig", "RegretTrace", "aggregate", "estimate_hyperparams", "export_csv",
    "read_csv", "run_experiment", "run_trial",
    "InfoAccumulator", "accumulate", "c1", "greedy_gamma_bound", "mutual_information",
    "Kernel", "kernel_eval", "Objective", "evaluate_noisy", "build_objective",
    "KINDS", "Policy", "observe", "select_next",
]
