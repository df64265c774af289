"""Optimal time reversal on the 87Rb F=2 Zeeman manifold.

Breit-Rabi levels, the RF-driven Hamiltonian, dCRAB pulses, closed and
dephasing-noisy propagation, a subplex/dCRAB optimiser, state metrics,
and the reversal experiments built from them.
"""

from .dynamics import (NoiseModel, Trajectory, basis_state, final_state, populations,
                       propagate_gksl, propagate_unitary, pure_state, purity)
from .errors import DomainError, InvalidStateError, NumericalError, PreconditionError
from .hamiltonian import ControlCoupling, SystemModel, rf_hamiltonian, total_hamiltonian
from .levels import RB87, LevelSet, PhysicalConstants, breit_rabi_levels, drift_hamiltonian
from .metrics import ComparisonReport, compare, loschmidt_echo, uhlmann_fidelity
from .optimizer import (Objective, OptimizationRun, OptimizerConfig, dcrab_optimize,
                        error_function, subplex_minimize)
from .pulse import Pulse, constant_pulse, naive_time_reverse, truncate

__version__ = "0.1.0"

__all__ = [
    "ComparisonReport", "ControlCoupling", "DomainError", "InvalidStateError", "LevelSet",
    "NoiseModel", "NumericalError", "Objective", "OptimizationRun", "OptimizerConfig",
    "PhysicalConstants", "PreconditionError", "Pulse", "RB87", "SystemModel", "Trajectory",
    "basis_state", "breit_rabi_levels", "compare", "constant_pulse", "dcrab_optimize",
    "drift_hamiltonian", "error_function", "final_state", "loschmidt_echo",
    "naive_time_reverse", "populations", "propagate_gksl", "propagate_unitary", "pure_state",
    "purity", "rf_hamiltonian", "subplex_minimize", "total_hamiltonian", "truncate",
    "uhlmann_fidelity",
]
