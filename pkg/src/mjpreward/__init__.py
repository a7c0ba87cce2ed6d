"""Moments and the normal approximation of cumulative rewards of time-inhomogeneous Markov jump processes."""

from .cltapprox import CoverageRow, CoverageTable, coverage_study, normal_approx_cdf, normal_quantile
from .core import (
    BetaComponent,
    BetaSum,
    Deterministic,
    InitialDistribution,
    ModelError,
    ModelSpec,
    ValidationReport,
    beta_law,
    validate_model,
)
from .exprlang import ExprError, TimeFunction, parse
from .modelfile import ModelFileError, load_model, model_from_dict, model_to_dict, model_to_json
from .models import BUILTINS, builtin
from .moments import MomentSolution, solve_mean, solve_moments
from .odesolve import SolverConfig, SolverError
from .periodic import PeriodicConstants, PeriodicError, periodic_clt_approx, solve_periodic
from .resetting import ResetResult, ResetSpec, solve_resetting
from .sim import SampleStats, SimulationError, monte_carlo, simulate_rewards
from .transition import mixing_profile, transition_matrix, transition_matrices

__version__ = "0.1.0"
