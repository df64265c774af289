"""Population-transfer objective and the dressed chopped-random-basis loop."""

from dataclasses import dataclass, field

import numpy as np

from ..dynamics import DEFAULT_DT, check_density_matrix, final_state, populations, propagate_gksl
from ..hamiltonian import SystemModel
from ..pulse import DEFAULT_HARMONICS, PAPER_CARRIER_HZ, PAPER_CLAMP_HZ, Pulse, constant_pulse
from .subplex import OptimizationRun, OptimizerConfig, subplex_minimize


DEFAULT_STOP_EPSILON = 5e-3
DEFAULT_CONFIG = OptimizerConfig(stop_value=DEFAULT_STOP_EPSILON)


def error_function(final, target_populations):
    """Half the l1 distance between the diagonal of ``final`` and the target."""
    p = populations(final)
    eps = 0.5 * float(np.sum(np.abs(p - np.asarray(target_populations, dtype=float))))
    return min(eps, 1.0)


@dataclass(frozen=True)
class Objective:
    """Drive ``initial_state`` so its populations match ``target_populations`` at T.

    ``baseline`` is an existing waveform the optimised harmonics are added
    to (the bare carrier when None).
    """

    initial_state: np.ndarray
    target_populations: np.ndarray
    duration: float
    system: SystemModel = field(default_factory=SystemModel)
    noise: object = None
    carrier_hz: float = PAPER_CARRIER_HZ
    clamp_hz: tuple = PAPER_CLAMP_HZ
    harmonics: int = DEFAULT_HARMONICS
    dt: float = DEFAULT_DT
    baseline: Pulse = None

    def __post_init__(self):
        object.__setattr__(self, "initial_state", check_density_matrix(self.initial_state))
        tgt = np.asarray(self.target_populations, dtype=float)
        if tgt.shape != (5,) or np.any(tgt < 0) or np.any(tgt > 1):
            raise ValueError("target populations must be five numbers in [0, 1]")
        if abs(tgt.sum() - 1.0) > 1e-9:
            raise ValueError(f"target populations sum to {tgt.sum()!r}, expected 1")
        object.__setattr__(self, "target_populations", tgt)
        if not self.duration > 0:
            raise ValueError("duration must be positive")
        if self.baseline is not None and self.baseline.duration != self.duration:
            raise ValueError("baseline pulse duration differs from objective duration")

    def start_pulse(self):
        if self.baseline is not None:
            return self.baseline
        return constant_pulse(self.duration, self.carrier_hz, self.clamp_hz)

    def default_basis(self):
        """nu_k / 2pi = k / T for k = 1 .. harmonics."""
        return np.arange(1, self.harmonics + 1) / self.duration

    def final(self, pulse):
        if self.noise is None:
            return final_state(self.initial_state, pulse, self.system, self.dt)
        return propagate_gksl(self.initial_state, pulse, self.system, self.noise,
                              self.dt, record_stride=0).final

    def error(self, pulse):
        return error_function(self.final(pulse), self.target_populations)


def evaluate_objective(coeffs, objective, basis=None, baseline=None):
    """epsilon for coefficient vector ``coeffs`` on harmonic frequencies ``basis`` (Hz).

    The pulse is ``baseline`` (default: the objective's start pulse) plus
    the harmonics described by ``coeffs``.
    """
    if basis is None:
        basis = objective.default_basis()
    base = objective.start_pulse() if baseline is None else baseline
    pulse = Pulse.from_coefficients(coeffs, objective.duration, basis, baseline=base)
    return objective.error(pulse)


def dressed_basis(objective, rng, dressed):
    k = np.arange(1, objective.harmonics + 1)
    if not dressed:
        return k / objective.duration
    return (k + rng.uniform(-0.5, 0.5, size=k.size)) / objective.duration


def dcrab_optimize(objective, config=DEFAULT_CONFIG):
    """Optimise the drive for ``objective`` by dCRAB with subplex inner searches.

    Super-iteration 1 uses nu_k = 2 pi k / T.  With ``config.dressing`` the
    later ones draw nu_k = 2 pi (k + r_k) / T, r_k ~ U(-1/2, 1/2), from the
    seeded generator.  Each super-iteration optimises fresh coefficients
    added on top of the best waveform so far, starting from zero (no
    correction), so the result is never worse than the start pulse.

    The default configuration stops once epsilon <= 5e-3; pass a config
    with ``stop_value=None`` to spend the whole budget.
    """
    rng = np.random.default_rng(np.random.SeedSequence(config.rng_seed))
    current = objective.start_pulse()
    best_eps = objective.error(current)
    history = [(1, best_eps)]
    count = 1
    coeff_blocks = []
    reason = ""
    for s in range(config.super_iterations):
        if config.stop_value is not None and best_eps <= config.stop_value:
            reason = "stop_value"
            break
        basis = dressed_basis(objective, rng, config.dressing and s > 0)
        base = current

        def fn(c, basis=basis, base=base):
            return objective.error(Pulse.from_coefficients(c, objective.duration, basis,
                                                           baseline=base))

        run = subplex_minimize(fn, np.zeros(2 * objective.harmonics), config)
        for i, f in run.history:
            history.append((count + i, min(f, best_eps)))
        count += run.evaluation_count
        reason = run.converged
        if run.best_epsilon < best_eps:
            best_eps = run.best_epsilon
            current = Pulse.from_coefficients(run.best_coefficients, objective.duration,
                                              basis, baseline=base)
            coeff_blocks.append(run.best_coefficients)
    coeffs = np.concatenate(coeff_blocks) if coeff_blocks else np.zeros(2 * objective.harmonics)
    return OptimizationRun(coeffs, best_eps, count, history, current, reason)
