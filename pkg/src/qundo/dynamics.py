"""Closed and dephasing-noisy evolution of the F=2 density matrix.

Closed dynamics use a fourth-order commutator-free Magnus step (two
exact exponentials of the Hamiltonian at the Gauss points).  Steps that
straddle a point where the drive saturates against its clamp are split
there, so the integrator never sees a kink inside a step.  Open dynamics
apply the same step to the GKSL generator with pure-dephasing
dissipators (classical RK4 is available as an alternative) and average
over quasi-static draws of the bias field.
"""

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import InvalidStateError, NumericalError
from .hamiltonian import DRIVE_PATTERN
from .parallel import ordered_map

DEFAULT_DT = 10e-9


# --- states ----------------------------------------------------------------

def basis_state(index):
    """Projector onto basis state ``index`` (0 is m_F = +2)."""
    rho = np.zeros((5, 5), dtype=complex)
    rho[index, index] = 1.0
    return rho


def pure_state(vector):
    v = np.asarray(vector, dtype=complex)
    v = v / np.linalg.norm(v)
    return np.outer(v, v.conj())


def diagonal_state(populations):
    return np.diag(np.asarray(populations, dtype=float)).astype(complex)


def maximally_mixed():
    return np.eye(5, dtype=complex) / 5.0


def check_density_matrix(rho, tol=1e-10, psd_tol=1e-9):
    """Return ``rho`` as a complex array or raise InvalidStateError."""
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (5, 5):
        raise InvalidStateError(f"expected a 5x5 matrix, got shape {rho.shape}")
    if not np.all(np.isfinite(rho)):
        raise InvalidStateError("state has non-finite entries")
    if np.max(np.abs(rho - rho.conj().T)) > tol:
        raise InvalidStateError("state is not Hermitian")
    if abs(np.trace(rho) - 1.0) > tol:
        raise InvalidStateError(f"state trace {np.trace(rho).real:.12g} != 1")
    if np.linalg.eigvalsh(rho).min() < -psd_tol:
        raise InvalidStateError("state has a negative eigenvalue")
    return rho


def populations(rho):
    """Real diagonal of ``rho`` in m_F = +2 ... -2 order."""
    return np.real(np.diagonal(np.asarray(rho))).copy()


def purity(rho):
    rho = np.asarray(rho)
    return float(np.real(np.einsum("...ij,...ji->...", rho, rho)))


# --- noise and trajectories --------------------------------------------------

@dataclass(frozen=True)
class NoiseModel:
    """Pure dephasing plus quasi-static bias-field noise.

    ``dephasing_rates`` are the five gamma_n in rad/s, ``field_sigma`` the
    standard deviation of the bias field in gauss.
    """

    dephasing_rates: np.ndarray = field(default_factory=lambda: np.zeros(5))
    field_sigma: float = 0.0
    field_samples: int = 32
    rng_seed: int = 0

    def __post_init__(self):
        g = np.asarray(self.dephasing_rates, dtype=float)
        if g.shape == ():
            g = np.full(5, float(g))
        if g.shape != (5,) or np.any(g < 0) or not np.all(np.isfinite(g)):
            raise ValueError("dephasing_rates must be five non-negative numbers")
        if not self.field_sigma >= 0:
            raise ValueError("field_sigma must be non-negative")
        if int(self.field_samples) < 1:
            raise ValueError("field_samples must be at least 1")
        object.__setattr__(self, "dephasing_rates", g)
        object.__setattr__(self, "field_samples", int(self.field_samples))

    @classmethod
    def uniform(cls, gamma, field_sigma=0.0, field_samples=32, rng_seed=0):
        return cls(np.full(5, float(gamma)), field_sigma, field_samples, rng_seed)

    def field_draws(self, b0):
        """Bias field for each sample; sample i uses its own seeded stream."""
        if self.field_sigma == 0.0:
            return np.full(self.field_samples, float(b0))
        draws = np.empty(self.field_samples)
        for i in range(self.field_samples):
            rng = np.random.default_rng(np.random.SeedSequence(self.rng_seed, spawn_key=(i,)))
            draws[i] = b0 + self.field_sigma * rng.standard_normal()
        return draws


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray

    @property
    def populations(self):
        return np.real(np.diagonal(self.states, axis1=1, axis2=2)).copy()

    @property
    def purity(self):
        return np.real(np.einsum("tij,tji->t", self.states, self.states))

    @property
    def final(self):
        return self.states[-1]


# --- time grid ---------------------------------------------------------------

@dataclass
class DriveGrid:
    """Integration steps for one pulse.

    ``bounds`` are the step edges (regular nodes every dt plus the points
    where the drive saturates), ``f1``/``f2`` the clamped drive at the two
    Gauss points of each step, ``record`` the steps whose end state is
    stored and ``record_times`` the stored times (starting with 0).
    """

    bounds: np.ndarray
    f1: np.ndarray
    f2: np.ndarray
    record: np.ndarray
    record_times: np.ndarray

    @property
    def steps(self):
        return np.diff(self.bounds)


def time_grid(pulse, dt, record_stride=1):
    """Build the integration grid of ``pulse`` for nominal step ``dt``.

    States are recorded on every ``record_stride``-th regular node and at
    T; ``record_stride=0`` records only T.
    """
    T = pulse.duration
    if not dt > 0:
        raise ValueError("dt must be positive")
    # pulses shorter than one step get a single step
    dt = min(float(dt), T)
    n = max(1, int(np.ceil(T / dt - 1e-9)))
    lo, hi = pulse.clamp
    bounds, f1, f2, labels = _kernels.drive_grid(float(T), float(dt), n, pulse.carrier,
                                                 lo, hi, *pulse._arrays)
    if record_stride == 0:
        record = labels == n
    else:
        record = (labels >= 0) & ((labels % record_stride == 0) | (labels == n))
    record_times = np.concatenate([[0.0], bounds[1:][record]])
    return DriveGrid(bounds, f1, f2, record, record_times)


def _drive_arrays(model):
    return (np.ascontiguousarray(model.drift_diagonal, dtype=float),
            np.ascontiguousarray(DRIVE_PATTERN, dtype=float),
            np.ascontiguousarray(model.coupling.offdiagonal, dtype=float))


# --- propagation -------------------------------------------------------------

def propagate_unitary(rho0, pulse, model, dt=DEFAULT_DT, record_stride=1):
    """Liouville--von Neumann evolution of ``rho0`` under H(t) = H0 + H_RF(t).

    ``rho0`` is split into its eigenvectors, each evolved as a wavefunction
    and recombined with the original weights, so the spectrum is conserved
    by construction.  States are stored every ``record_stride`` steps and
    at T (``record_stride=0``: only the endpoints).

    Raises:
        NumericalError: if a non-finite amplitude appears; ``.step`` is the
            index of the offending step.
    """
    rho0 = check_density_matrix(rho0)
    weights, vecs = np.linalg.eigh(rho0)
    keep = weights > 1e-15
    weights = weights[keep]
    vecs = np.ascontiguousarray(vecs[:, keep].T)
    grid = time_grid(pulse, dt, record_stride)
    h0, dg, off = _drive_arrays(model)
    psi, bad = _kernels.propagate_vectors(h0, dg, off, grid.f1, grid.f2, grid.steps,
                                          vecs, grid.record)
    if bad >= 0:
        raise NumericalError(f"non-finite amplitude at step {bad}", step=int(bad))
    states = np.einsum("a,tai,taj->tij", weights, psi, psi.conj())
    return Trajectory(grid.record_times, states)


def final_state(rho0, pulse, model, dt=DEFAULT_DT):
    """State at t = T under closed dynamics."""
    return propagate_unitary(rho0, pulse, model, dt, record_stride=0).final


def _gksl_single(rho0, pulse, model, gammas, grid, method):
    h0, dg, off = _drive_arrays(model)
    if method == "magnus":
        out, bad = _kernels.gksl_magnus(h0, dg, off, gammas, grid.f1, grid.f2, grid.steps,
                                        rho0, grid.record)
    else:
        b = grid.bounds
        h = grid.steps
        fa = pulse.sample(b[:-1])
        fm = pulse.sample(b[:-1] + 0.5 * h)
        fb = pulse.sample(b[1:])
        out, bad = _kernels.gksl_rk4(h0, dg, off, gammas, fa, fm, fb, h, rho0, grid.record)
    if bad >= 0:
        raise NumericalError(f"non-finite density matrix at step {bad}", step=int(bad))
    return out


def propagate_gksl(rho0, pulse, model, noise, dt=DEFAULT_DT, record_stride=1,
                   method="magnus", workers=1):
    """GKSL evolution with dephasing and quasi-static field noise.

    Each of ``noise.field_samples`` draws B ~ N(B0, sigma) rebuilds H0 and
    integrates drho/dt = -i[H, rho] + sum_n g_n (2 P_n rho P_n - {P_n, rho});
    the returned trajectory is the sample mean.  ``method`` is "magnus"
    (exponential integrator sharing the closed-dynamics step) or "rk4".
    """
    if method not in ("magnus", "rk4"):
        raise ValueError(f"unknown GKSL method {method!r}")
    rho0 = np.ascontiguousarray(check_density_matrix(rho0))
    grid = time_grid(pulse, dt, record_stride)
    gammas = np.ascontiguousarray(noise.dephasing_rates, dtype=float)
    draws = noise.field_draws(model.bias_field)
    if noise.field_sigma == 0.0:
        draws = draws[:1]

    def run(b):
        return _gksl_single(rho0, pulse, model.at_field(b), gammas, grid, method)

    states = np.mean(ordered_map(run, draws, workers), axis=0)
    return Trajectory(grid.record_times, states)


def propagate_gksl_sequence(rho0, pulses, model, noise, dt=DEFAULT_DT, workers=1):
    """Final state after ``pulses`` applied back to back under GKSL noise.

    Each field draw is held fixed across the whole sequence (the noise is
    quasi-static), and the sample mean is taken only at the end.
    """
    rho0 = np.ascontiguousarray(check_density_matrix(rho0))
    grids = [time_grid(p, dt, 0) for p in pulses]
    gammas = np.ascontiguousarray(noise.dephasing_rates, dtype=float)
    draws = noise.field_draws(model.bias_field)
    if noise.field_sigma == 0.0:
        draws = draws[:1]

    def run(b):
        m = model.at_field(b)
        rho = rho0
        for p, g in zip(pulses, grids):
            rho = np.ascontiguousarray(_gksl_single(rho, p, m, gammas, g, "magnus")[-1])
        return rho

    return np.mean(ordered_map(run, draws, workers), axis=0)
