"""Control and total Hamiltonians in the rotating frame.

The RF term couples neighbouring m_F levels with spin-2 J_x matrix
elements and shifts the diagonal by (-2f, -f, 0, f, 2f), where f is the
instantaneous drive frequency.  Units are rad/s throughout (hbar = 1).
"""

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import DomainError
from .levels import RB87, TWO_PI, M_F, breit_rabi_levels, drift_hamiltonian

#: Diagonal pattern multiplying f(t) in the RF Hamiltonian.
DRIVE_PATTERN = -M_F.astype(float)

#: <m|J_x|m-1> for J = 2, in storage order (+2,+1), (+1,0), (0,-1), (-1,-2).
JX_OFFDIAG = np.array([1.0, np.sqrt(1.5), np.sqrt(1.5), 1.0])

PAPER_FIELD_GAUSS = 6.179
PAPER_RABI = TWO_PI * 60.0e3


def spin2_jx():
    """Spin-2 J_x in the m_F = +2 ... -2 basis."""
    return np.diag(JX_OFFDIAG, 1) + np.diag(JX_OFFDIAG, -1)


def spin2_jz():
    return np.diag(M_F.astype(float))


@dataclass(frozen=True)
class ControlCoupling:
    """RF coupling strength.

    ``rabi_frequency`` is Omega in rad/s.  Zero is accepted so that the
    bare drift can be studied through the same code path.
    """

    rabi_frequency: float = PAPER_RABI

    def __post_init__(self):
        if not (np.isfinite(self.rabi_frequency) and self.rabi_frequency >= 0):
            raise ValueError("rabi_frequency must be finite and non-negative")

    @property
    def offdiagonal(self):
        return self.rabi_frequency * JX_OFFDIAG


def rf_hamiltonian(f_value, coupling):
    """RF Hamiltonian for instantaneous drive frequency ``f_value`` (rad/s)."""
    f_value = float(f_value)
    if not np.isfinite(f_value):
        raise DomainError("drive frequency must be finite")
    return (np.diag(DRIVE_PATTERN * f_value)
            + coupling.rabi_frequency * spin2_jx()).astype(complex)


@dataclass(frozen=True)
class SystemModel:
    """Drift levels plus RF coupling.

    ``drift`` overrides the Breit--Rabi energies when given (a 5-vector of
    rad/s), which is how tests switch H0 off.
    """

    bias_field: float = PAPER_FIELD_GAUSS
    coupling: ControlCoupling = field(default_factory=ControlCoupling)
    constants: object = RB87
    drift: object = None

    @cached_property
    def drift_diagonal(self):
        if self.drift is not None:
            d = np.asarray(self.drift, dtype=float)
            if d.shape != (5,):
                raise ValueError("drift override must be a 5-vector")
            return d
        return breit_rabi_levels(self.bias_field, self.constants).energies

    @property
    def drift_matrix(self):
        return np.diag(self.drift_diagonal).astype(complex)

    def at_field(self, B):
        """Same model with the bias field replaced (drift recomputed)."""
        return SystemModel(B, self.coupling, self.constants, self.drift)


def total_hamiltonian(t, pulse, drift, coupling):
    """H(t) = H0 + H_RF(f(t)) for a pulse defined on [0, T]."""
    if not 0.0 <= t <= pulse.duration:
        raise DomainError(f"t = {t!r} s outside pulse support [0, {pulse.duration!r}] s")
    return np.asarray(drift, dtype=complex) + rf_hamiltonian(pulse.evaluate(t), coupling)


__all__ = [
    "ControlCoupling", "SystemModel", "rf_hamiltonian", "total_hamiltonian",
    "spin2_jx", "spin2_jz", "drift_hamiltonian", "DRIVE_PATTERN",
]
