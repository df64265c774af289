"""Zeeman sub-level energies of the 87Rb F=2 ground manifold.

Energies come from the Breit--Rabi formula and are re-referenced so that
the m_F = 0 level sits at zero.  Everything is an angular frequency
(rad/s) with hbar = 1.  Index 0 is m_F = +2, index 4 is m_F = -2.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError

TWO_PI = 2.0 * np.pi

#: m_F quantum numbers in storage order.
M_F = np.array([2, 1, 0, -1, -2])

#: Upper limit on the bias field; beyond this the F=2 labelling is meaningless.
MAX_FIELD_GAUSS = 1000.0


@dataclass(frozen=True)
class PhysicalConstants:
    """Atomic constants entering the Breit--Rabi formula.

    Attributes:
        hyperfine_splitting: ground-state hyperfine interval (rad/s).
        electron_g_factor: g_J of the 5S_1/2 level.
        nuclear_g_factor: g_I, signed (negative for 87Rb).
        bohr_magneton_over_hbar: mu_B / hbar in rad/s per gauss.
        nuclear_spin: I.
    """

    hyperfine_splitting: float = TWO_PI * 6.834682610904e9
    electron_g_factor: float = 2.00233113
    nuclear_g_factor: float = -0.0009951414
    bohr_magneton_over_hbar: float = TWO_PI * 1.39962449361e6
    nuclear_spin: float = 1.5

    def __post_init__(self):
        for name in ("hyperfine_splitting", "electron_g_factor",
                     "bohr_magneton_over_hbar", "nuclear_spin"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")


RB87 = PhysicalConstants()


@dataclass(frozen=True)
class LevelSet:
    """F=2 sub-level energies at a given bias field."""

    energies: np.ndarray = field(repr=False)
    bias_field: float

    def __post_init__(self):
        e = np.asarray(self.energies, dtype=float)
        if e.shape != (5,):
            raise ValueError("expected five energies ordered m_F = +2 ... -2")
        e.setflags(write=False)
        object.__setattr__(self, "energies", e)

    def in_khz(self):
        """Energies divided by 2*pi, in kHz."""
        return self.energies / TWO_PI / 1e3


def breit_rabi_levels(B, constants=RB87):
    """Return the F=2 Zeeman energies at bias field ``B`` (gauss).

    Uses the Breit--Rabi expression for J = 1/2,

        E(F=2, m) = -A/(2(2I+1)) + g_I mu_B m B + (A/2) sqrt(1 + 4 m x/(2I+1) + x^2)

    with x = (g_J - g_I) mu_B B / A, then subtracts the m_F = 0 value.

    Raises:
        DomainError: if B is negative, non-finite or above ``MAX_FIELD_GAUSS``.
    """
    B = float(B)
    if not (np.isfinite(B) and 0.0 <= B < MAX_FIELD_GAUSS):
        raise DomainError(
            f"bias field {B!r} G outside the valid interval [0, {MAX_FIELD_GAUSS:g}) G")
    c = constants
    hfs = c.hyperfine_splitting
    two_i1 = 2.0 * c.nuclear_spin + 1.0
    mub = c.bohr_magneton_over_hbar
    x = (c.electron_g_factor - c.nuclear_g_factor) * mub * B / hfs
    m = M_F.astype(float)
    # for m = -2 the radicand is (1 - x)^2; abs keeps the branch right for x < 1
    radicand = np.abs(1.0 + 4.0 * m * x / two_i1 + x * x)
    energies = (-hfs / (2.0 * two_i1) + c.nuclear_g_factor * mub * m * B
                + 0.5 * hfs * np.sqrt(radicand))
    energies = energies - energies[2]
    energies[2] = 0.0
    return LevelSet(energies, B)


def drift_hamiltonian(levels):
    """Diagonal 5x5 drift Hamiltonian H0 (rad/s) built from ``levels``."""
    return np.diag(levels.energies).astype(complex)
