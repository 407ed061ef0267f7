"""Sampling-location optimization for Gaussian-process variance via QUBO.

Compiles the problem of picking K sampling locations that minimize the
total posterior variance of a GP into a quadratic unconstrained binary
optimization instance, solves it exactly or by simulated annealing, and
benchmarks against submodular greedy and random baselines.
"""

from .backend import backend_name
from .baselines import GreedyResult, greedy_select, random_select
from .errors import CapacityError, GpquboError, MalformedInputError, NumericalDegeneracyError
from .gp import (
    Domain,
    Hyperparams,
    Selection,
    kernel_eval,
    posterior_mean,
    posterior_variance,
    total_variance,
    variance_reduction,
)
from .harness import (
    ExperimentConfig,
    RunRecord,
    aggregate,
    default_config,
    make_grid,
    run_experiment,
)
from .model import (
    QuboInstance,
    alpha,
    beta,
    build,
    constraint_energy,
    evaluate,
    penalty_bound,
)
from .solve import (
    AnnealSchedule,
    SolveReport,
    oracle_best_subset,
    solve_anneal,
    solve_exact_constrained,
    solve_exact_gray,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "backend_name",
    "CapacityError",
    "GpquboError",
    "MalformedInputError",
    "NumericalDegeneracyError",
    "Domain",
    "Hyperparams",
    "Selection",
    "kernel_eval",
    "posterior_mean",
    "posterior_variance",
    "total_variance",
    "variance_reduction",
    "QuboInstance",
    "alpha",
    "beta",
    "build",
    "constraint_energy",
    "evaluate",
    "penalty_bound",
    "AnnealSchedule",
    "SolveReport",
    "oracle_best_subset",
    "solve_anneal",
    "solve_exact_constrained",
    "solve_exact_gray",
    "GreedyResult",
    "greedy_select",
    "random_select",
    "ExperimentConfig",
    "RunRecord",
    "aggregate",
    "default_config",
    "make_grid",
    "run_experiment",
]
