import io

import numpy as np
import pytest

from qundo.config import ConfigError, parse_config, parse_config_text
from qundo.experiments import SWEEP_DURATIONS, TARGETS
from qundo.levels import TWO_PI


def test_empty_document_gives_reference_setup():
    cfg = parse_config_text("", env={})
    spec = cfg.spec("forward_backward")
    assert spec.system.bias_field == 6.179
    assert spec.system.coupling.rabi_frequency == pytest.approx(TWO_PI * 60e3, rel=1e-15)
    assert spec.clamp_hz == (4150e3, 4600e3)
    assert spec.duration == 100e-6
    assert dict(spec.targets) == {k: tuple(v) for k, v in TARGETS.items()}
    assert spec.noise_band is None


def test_sweep_durations_and_band():
    cfg = parse_config_text("[experiment]\ndurations_us = [10,20,40,60,70,80,100]\n", env={})
    spec = cfg.spec("truncation_sweep")
    assert spec.durations == SWEEP_DURATIONS
    assert spec.noise_band == pytest.approx((TWO_PI * 20, TWO_PI * 200, 1e-3))
    assert spec.targets == (("A", TARGETS["A"]),)


def test_field_setting_changes_levels():
    cfg = parse_config_text("[system]\nbias_field_gauss = 6.179\n", env={})
    e = cfg.system.model().drift_diagonal / TWO_PI / 1e3
    assert np.all(np.abs(e - [8635, 4320, 0, -4326, -8657]) <= 2)


@pytest.mark.parametrize("doc, fragment", [
    ("[system]\nbias_field = 6.0", "bias_field_gauss"),
    ("[system]\nrabi_mhz = 0.06", "rabi_khz"),
    ("[experiment]\ntau_past = 33", "tau_past_us"),
    ("[optimizer]\nmax_evals = 10", "max_evals"),
    ("[plots]\nx = 1", "plots"),
    ("[system]\nrabi_khz = 'fast'", "number"),
    ("[optimizer]\nsuper_iterations = 0", "super_iterations"),
    ("[io]\nformats = ['xml']", "xml"),
    ("[experiment]\ntargets = { X = [1, 0] }", "five"),
    ("not toml [", "TOML"),
])
def test_rejections(doc, fragment):
    with pytest.raises(ConfigError, match=fragment):
        parse_config_text(doc, env={})


def test_seed_override_from_environment():
    cfg = parse_config_text("[experiment]\nseeds = [1, 2]\n", env={"QUNDO_SEED": "17"})
    assert cfg.experiment.seeds == (17,)
    assert cfg.optimizer.rng_seed == 17


def test_named_targets_and_file_input(tmp_path):
    path = tmp_path / "run.toml"
    path.write_text("[experiment]\ntargets = { mine = [0, 0, 1, 0, 0], a = 'A' }\n"
                    "tau_past_us = 40\n[optimizer]\nmax_evaluations = 100\n")
    cfg = parse_config(str(path), env={})
    spec = cfg.spec("undo_to_past")
    assert dict(spec.targets)["a"] == TARGETS["A"]
    assert spec.tau_past == 40e-6
    assert spec.optimizer.max_evaluations == 100
    assert parse_config(io.StringIO("[io]\nout_dir = 'x'\n"), env={}).io.out_dir == "x"
