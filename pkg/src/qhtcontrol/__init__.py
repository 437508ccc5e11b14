"""Optimal control for noisy quantum hypothesis testing on a qubit.

Two hypotheses (no field, or a field along z) act on a qubit prepared in
|+> under one of three noise channels; piecewise-constant x/y controls are
optimized with GRAPE or simulated-annealing GRAPE so that the two final
states are as distinguishable as possible.
"""

from ._version import __version__
from .discrimination import Povm, Priors, fixed_local_error, helstrom_error, trace_distance
from .estimators import GrapeOptimizer, PulseOptimizer, SAGrapeOptimizer
from .objectives import Objective, objective_gradient, objective_value
from .optimize import AnnealOptions, GrapeOptions, OptimizationResult, grape, optimize, sagrape
from .problem import DiscriminationProblem, TimeGrid
from .scenarios import make_problem, robustness_report, run_sweep, uncontrolled_error

__all__ = [
    "AnnealOptions",
    "DiscriminationProblem",
    "GrapeOptimizer",
    "GrapeOptions",
    "Objective",
    "OptimizationResult",
    "Povm",
    "Priors",
    "PulseOptimizer",
    "SAGrapeOptimizer",
    "TimeGrid",
    "__version__",
    "fixed_local_error",
    "grape",
    "helstrom_error",
    "make_problem",
    "objective_gradient",
    "objective_value",
    "optimize",
    "robustness_report",
    "run_sweep",
    "sagrape",
    "trace_distance",
    "uncontrolled_error",
]
