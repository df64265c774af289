import json

import numpy as np
import pytest

from qundo.errors import DomainError, PreconditionError
from qundo.experiments import (TARGETS, ExperimentSpec, run_figure3_check,
                               run_forward_backward, run_truncation_sweep, run_undo_to_past,
                               task_seed)
from qundo.levels import TWO_PI
from qundo.optimizer import OptimizerConfig
from qundo.pulse import Pulse

FAST = OptimizerConfig(max_evaluations=40, super_iterations=2, stop_value=None)
T = 10e-6


def fast_spec(**kw):
    base = dict(duration=T, optimizer=FAST, record_stride=20)
    base.update(kw)
    return ExperimentSpec(**base)


def in_unit(v):
    return v is None or 0.0 <= v <= 1.0


def check_ranges(report):
    for r in report.records:
        for v in (r.forward_epsilon, r.backward_epsilon_oc, r.backward_epsilon_naive,
                  r.roundtrip_fidelity, r.echo, r.naive_fidelity, r.naive_echo):
            assert in_unit(v)


def test_spec_validation():
    with pytest.raises(PreconditionError):
        ExperimentSpec(kind="undo_to_past")
    with pytest.raises(PreconditionError):
        ExperimentSpec(kind="undo_to_past", tau_past=100e-6)
    with pytest.raises(PreconditionError):
        ExperimentSpec(kind="forward_backward", tau_past=10e-6)
    with pytest.raises(DomainError):
        ExperimentSpec(kind="truncation_sweep", durations=(200e-6,))
    with pytest.raises(ValueError):
        ExperimentSpec(kind="nope")


def test_forward_backward_fast(tmp_path):
    spec = fast_spec(targets=(("C", TARGETS["C"]), ("A", TARGETS["A"])),
                     cache_dir=str(tmp_path))
    rep = run_forward_backward(spec)
    check_ranges(rep)
    assert [r.name for r in rep.records] == ["A", "C"]
    for r in rep.records:
        assert r.backward_epsilon_oc <= r.backward_epsilon_naive
        # target |+2> is pure: fidelity = echo = returned p_+2
        assert abs(r.roundtrip_fidelity - r.echo) < 1e-9
        assert abs(r.final_populations[0] - r.echo) < 1e-9
        assert set(r.pulses) == {"forward", "backward_oc", "backward_naive"}
        traj = r.trajectories["forward"]
        assert np.allclose(traj.populations.sum(axis=1), 1.0, atol=1e-9)
    d = json.loads(rep.to_json())
    assert d["metadata"]["reference_lab_accuracy"] == 0.92
    # second run hits the cache and reproduces the report
    again = run_forward_backward(spec)
    assert json.loads(again.to_json())["records"][0]["backward_epsilon_oc"] == \
        d["records"][0]["backward_epsilon_oc"]


def test_identity_target_trivial():
    spec = fast_spec(targets=(("id", (1, 0, 0, 0, 0)),), duration=1e-9)
    r = run_forward_backward(spec).records[0]
    assert r.forward_epsilon < 1e-4
    assert r.backward_epsilon_oc < 1e-4 and r.backward_epsilon_naive < 1e-4


def test_thread_count_does_not_change_report():
    spec = fast_spec(targets=(("B", TARGETS["B"]), ("D", TARGETS["D"])), seeds=(0, 3))
    a = run_forward_backward(spec)
    b = run_forward_backward(ExperimentSpec(**{**spec.__dict__, "workers": 3}))
    assert a.to_json() == b.to_json()


def test_truncation_sweep_fast():
    spec = fast_spec(kind="truncation_sweep", targets=(("A", TARGETS["A"]),),
                     durations=(2e-6, 5e-6, 10e-6),
                     noise_band=(TWO_PI * 20, TWO_PI * 200, 1e-3), field_samples=3)
    rep = run_truncation_sweep(spec)
    check_ranges(rep)
    assert [round(r.duration * 1e6) for r in rep.records] == [2, 5, 10]
    for r in rep.records:
        assert r.backward_epsilon_oc <= r.backward_epsilon_naive
        lo, hi = r.noise_band_oc
        assert 0 <= lo <= hi <= 1
        assert r.backward_epsilon_oc <= hi + 1e-9
    full = run_forward_backward(fast_spec(targets=(("A", TARGETS["A"]),))).records[0]
    end = rep.records[-1]
    assert end.backward_epsilon_oc == full.backward_epsilon_oc
    assert end.backward_epsilon_naive == full.backward_epsilon_naive


def test_undo_to_past_fast():
    spec = fast_spec(kind="undo_to_past", targets=(("A", TARGETS["A"]),), tau_past=3.3e-6)
    rep = run_undo_to_past(spec)
    check_ranges(rep)
    md = rep.metadata
    assert md["tau1_us"] + md["tau2_us"] == pytest.approx(10.0, abs=1e-9)
    r = rep.records[0]
    assert r.duration == pytest.approx(6.7e-6)
    assert r.backward_epsilon_oc <= r.backward_epsilon_naive


def test_undo_from_zero_matches_round_trip():
    a = run_undo_to_past(fast_spec(kind="undo_to_past", targets=(("A", TARGETS["A"]),),
                                   tau_past=0.0)).records[0]
    b = run_forward_backward(fast_spec(targets=(("A", TARGETS["A"]),))).records[0]
    assert a.backward_epsilon_oc == b.backward_epsilon_oc


def test_figure3_fast():
    rep = run_figure3_check(fast_spec(kind="figure3"))
    traj = rep.records[0].trajectories["forward"]
    assert np.allclose(traj.populations[0], [0.5, 0, 0, 0, 0.5], atol=1e-12)
    assert np.allclose(traj.populations.sum(axis=1), 1.0, atol=1e-9)


def test_pulses_round_trip():
    rep = run_forward_backward(fast_spec(targets=(("D", TARGETS["D"]),)))
    for p in rep.records[0].pulses.values():
        assert Pulse.from_json(p.to_json()) == p


def test_task_seed_stable():
    assert task_seed(0, "forward", "A") == task_seed(0, "forward", "A")
    assert task_seed(0, "forward", "A") != task_seed(1, "forward", "A")
    assert task_seed(0, "forward", "A") != task_seed(0, "forward", "B")
