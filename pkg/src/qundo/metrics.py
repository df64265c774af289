"""Comparison of density matrices: Uhlmann fidelity, Loschmidt echo, accuracy."""

from dataclasses import dataclass

import numpy as np

from .dynamics import check_density_matrix, purity
from .errors import InvalidStateError, PreconditionError
from .optimizer.dcrab import error_function

CLIP_TOL = 1e-9
PURITY_TOL = 1e-6
# eigenvalues below this are rounding noise; their square roots (~1e-8)
# would otherwise leak into the fidelity
NOISE_FLOOR = 1e-14


def _psd_sqrt(rho):
    w, v = np.linalg.eigh(rho)
    if w.min() < -CLIP_TOL:
        raise InvalidStateError(f"eigenvalue {w.min():.3g} below -{CLIP_TOL:g}")
    w = np.where(w < NOISE_FLOOR, 0.0, w)
    return (v * np.sqrt(w)) @ v.conj().T


def uhlmann_fidelity(a, b):
    """(Tr sqrt(sqrt(a) b sqrt(a)))**2, computed with Hermitian square roots.

    Eigenvalues down to -1e-9 are clipped to zero; anything more negative
    raises InvalidStateError.  Eigenvalues under 1e-14 are treated as
    exact zeros.  The result is clipped to [0, 1].
    """
    a = check_density_matrix(a, psd_tol=CLIP_TOL)
    b = check_density_matrix(b, psd_tol=CLIP_TOL)
    sa = _psd_sqrt(a)
    inner = sa @ b @ sa
    inner = 0.5 * (inner + inner.conj().T)
    w = np.linalg.eigvalsh(inner)
    w = np.where(w < NOISE_FLOOR, 0.0, w)
    return float(min(max(np.sum(np.sqrt(w)) ** 2, 0.0), 1.0))


def loschmidt_echo(initial, returned):
    """Overlap Tr[returned initial] of the returned state with a pure initial one.

    Raises:
        PreconditionError: if ``initial`` is not pure.
    """
    initial = check_density_matrix(initial)
    returned = check_density_matrix(returned)
    if purity(initial) < 1.0 - PURITY_TOL:
        raise PreconditionError("the echo is defined only for a pure initial state")
    m = np.real(np.trace(returned @ initial))
    return float(min(max(m, 0.0), 1.0))


@dataclass(frozen=True)
class ComparisonReport:
    epsilon: float
    accuracy: float
    uhlmann_fidelity: float
    loschmidt_echo: float = None

    def to_dict(self):
        return {"epsilon": self.epsilon, "accuracy": self.accuracy,
                "fidelity": self.uhlmann_fidelity, "echo": self.loschmidt_echo}


def compare(target, achieved, initial=None):
    """Bundle epsilon, accuracy, fidelity and (for a pure ``initial``) the echo.

    The echo is measured between ``initial`` and ``achieved``; it is None
    when no initial state is given or it is mixed.
    """
    target = check_density_matrix(target, psd_tol=CLIP_TOL)
    achieved = check_density_matrix(achieved, psd_tol=CLIP_TOL)
    eps = error_function(achieved, np.real(np.diagonal(target)))
    echo = None
    if initial is not None and purity(check_density_matrix(initial)) >= 1.0 - PURITY_TOL:
        echo = loschmidt_echo(initial, achieved)
    return ComparisonReport(eps, 1.0 - eps, uhlmann_fidelity(target, achieved), echo)
