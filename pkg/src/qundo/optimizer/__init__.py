"""Pulse optimisation: error function, subplex search and dCRAB."""

from .dcrab import DEFAULT_CONFIG, Objective, dcrab_optimize, error_function, evaluate_objective
from .subplex import OptimizationRun, OptimizerConfig, partition_subspaces, subplex_minimize

__all__ = [
    "DEFAULT_CONFIG", "Objective", "OptimizationRun", "OptimizerConfig", "dcrab_optimize",
    "error_function", "evaluate_objective", "partition_subspaces", "subplex_minimize",
]
