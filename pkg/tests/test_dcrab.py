import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qundo.dynamics import basis_state, final_state, populations
from qundo.errors import NumericalError
from qundo.hamiltonian import SystemModel
from qundo.optimizer import (Objective, OptimizerConfig, dcrab_optimize, error_function,
                             evaluate_objective, subplex_minimize)
from qundo.pulse import Pulse, constant_pulse

T = 20e-6
pops = st.lists(st.floats(0, 1), min_size=5, max_size=5).filter(lambda v: sum(v) > 1e-3)


@given(pops, pops)
def test_error_function_range_and_zero(a, b):
    a = np.array(a) / sum(a)
    b = np.array(b) / sum(b)
    e = error_function(np.diag(a), b)
    assert 0.0 <= e <= 1.0
    assert error_function(np.diag(a), a) == 0.0
    assert np.isclose(e, 0.5 * np.abs(a - b).sum())


def test_error_function_orthogonal():
    assert error_function(basis_state(0), [0, 0, 0, 0, 1]) == 1.0


def test_objective_validation():
    with pytest.raises(ValueError):
        Objective(basis_state(0), [0.5, 0.5, 0.1, 0, 0], T)
    with pytest.raises(ValueError):
        Objective(basis_state(0), [1, 0, 0, 0], T)
    with pytest.raises(ValueError):
        Objective(basis_state(0), [1, 0, 0, 0, 0], 0.0)


def test_zero_coefficients_compose():
    obj = Objective(basis_state(0), [1, 0, 0, 0, 0], T)
    reached = populations(final_state(basis_state(0), constant_pulse(T), SystemModel()))
    obj2 = Objective(basis_state(0), reached / reached.sum(), T)
    manual = error_function(final_state(basis_state(0), constant_pulse(T), SystemModel()),
                            obj2.target_populations)
    assert evaluate_objective(np.zeros(14), obj2) == manual
    assert evaluate_objective(np.zeros(14), obj) == obj.error(constant_pulse(T))


def test_short_duration_trivial():
    obj = Objective(basis_state(0), [1, 0, 0, 0, 0], 1e-9)
    rng = np.random.default_rng(0)
    assert evaluate_objective(rng.uniform(-1e-3, 1e-3, 14), obj, ) < 1e-4


def test_single_iteration_equals_plain_subplex():
    obj = Objective(basis_state(0), [0.5, 0.5, 0, 0, 0], T)
    cfg = OptimizerConfig(max_evaluations=150, super_iterations=1, dressing=False)
    run = dcrab_optimize(obj, cfg)
    plain = subplex_minimize(lambda c: evaluate_objective(c, obj), np.zeros(14), cfg)
    assert np.array_equal(run.best_coefficients, plain.best_coefficients)
    assert run.best_epsilon == plain.best_epsilon


def test_never_worse_than_start_and_reproducible():
    obj = Objective(basis_state(0), [1, 0, 0, 0, 0], T)
    cfg = OptimizerConfig(max_evaluations=60, super_iterations=3, rng_seed=4)
    a = dcrab_optimize(obj, cfg)
    b = dcrab_optimize(obj, cfg)
    assert a.best_epsilon <= obj.error(constant_pulse(T))
    assert a.best_epsilon == b.best_epsilon
    assert a.resulting_pulse == b.resulting_pulse
    assert np.isclose(obj.error(a.resulting_pulse), a.best_epsilon, atol=0, rtol=0)
    best = [e for _, e in a.history]
    assert all(y <= x for x, y in zip(best, best[1:]))


def test_dressed_frequencies_within_band():
    obj = Objective(basis_state(0), [0, 0, 0, 0, 1], T)
    run = dcrab_optimize(obj, OptimizerConfig(max_evaluations=40, super_iterations=3,
                                              stop_value=None))
    p = run.resulting_pulse
    nus = np.array([h.nu_hz for h in p.harmonics]) * T
    ks = np.array([h.k for h in p.harmonics])
    assert np.all(np.abs(nus - ks) <= 0.5)
    first = nus[:7]
    assert np.allclose(first, np.arange(1, 8))


def test_reaches_easy_target():
    obj = Objective(basis_state(0), [0.5, 0.5, 0, 0, 0], 30e-6)
    run = dcrab_optimize(obj, OptimizerConfig(max_evaluations=1500, stop_value=0.02))
    assert run.best_epsilon <= 0.05


def test_baseline_objective():
    base = Pulse.from_coefficients([1e-3, 0], T)
    obj = Objective(basis_state(0), [0, 1, 0, 0, 0], T, baseline=base)
    assert obj.start_pulse() is base
    assert evaluate_objective(np.zeros(14), obj) == obj.error(base)
    with pytest.raises(ValueError):
        Objective(basis_state(0), [0, 1, 0, 0, 0], 2 * T, baseline=base)


def test_numerical_error_propagates():
    def f(c):
        return np.inf

    with pytest.raises(NumericalError):
        subplex_minimize(f, np.zeros(4), OptimizerConfig())


@given(st.integers(0, 1000))
@settings(max_examples=5)
def test_seed_changes_only_dressing(seed):
    obj = Objective(basis_state(0), [0, 0, 1, 0, 0], T)
    cfg = OptimizerConfig(max_evaluations=30, super_iterations=1, rng_seed=seed)
    ref = dcrab_optimize(obj, OptimizerConfig(max_evaluations=30, super_iterations=1))
    assert dcrab_optimize(obj, cfg).best_epsilon == ref.best_epsilon
