import csv
import json

import numpy as np
import pytest

from qundo.cli import main
from qundo.dynamics import basis_state, final_state
from qundo.hamiltonian import SystemModel
from qundo.pulse import Pulse


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_no_args_usage(capsys):
    code, _, err = run([], capsys)
    assert code == 2 and "usage" in err


def test_unknown_command(capsys):
    code, _, _ = run(["frobnicate"], capsys)
    assert code == 2


def test_levels(capsys, tmp_path):
    code, out, _ = run(["levels", "--field-gauss", "6.179", "--out", str(tmp_path / "l.csv")],
                       capsys)
    assert code == 0
    rows = list(csv.reader(out.splitlines()))
    assert rows[0] == ["m_F", "energy_khz"]
    vals = np.array([float(r[1]) for r in rows[1:]])
    assert np.all(np.abs(vals - [8635, 4320, 0, -4326, -8657]) <= 2)
    assert (tmp_path / "l.csv").read_text() == out


def test_runtime_error_is_machine_readable(capsys):
    code, _, err = run(["levels", "--field-gauss", "2000"], capsys)
    assert code == 1
    msg = json.loads(err.strip().splitlines()[-1])
    assert msg["error"] == "DomainError"


def test_bad_config_exit_1(capsys, tmp_path):
    cfg = tmp_path / "c.toml"
    cfg.write_text("[system]\nfield = 1\n")
    code, _, err = run(["--config", str(cfg), "levels"], capsys)
    assert code == 1 and "ConfigError" in err


def test_pulse_eval_and_simulate_round_trip(capsys, tmp_path, monkeypatch):
    monkeypatch.delenv("QUNDO_SEED", raising=False)
    p = Pulse.from_coefficients([1e-3, -2e-4, 3e-4, 1e-4], 10e-6)
    path = tmp_path / "p.json"
    path.write_text(p.to_json())
    code, out, _ = run(["pulse", "eval", str(path), "--t-us", "0,5,10"], capsys)
    assert code == 0
    f = [float(r.split(",")[1]) for r in out.splitlines()[1:]]
    assert np.allclose(f, p.evaluate(np.array([0, 5e-6, 10e-6])) / (2e3 * np.pi))
    traj = tmp_path / "t.csv"
    code, out, _ = run(["simulate", str(path), "--out", str(traj),
                        "--state-out", str(tmp_path / "s.json")], capsys)
    assert code == 0
    got = np.array(json.loads(out)["final_populations"])
    ref = np.real(np.diag(final_state(basis_state(0), p, SystemModel())))
    assert np.max(np.abs(got - ref)) < 1e-9
    header = traj.read_text().splitlines()[0]
    assert header == "t_us,p_plus2,p_plus1,p_0,p_minus1,p_minus2,purity"
    data = np.loadtxt(traj, delimiter=",", skiprows=1)
    assert np.allclose(data[:, 1:6].sum(axis=1), 1.0, atol=1e-9)


def test_optimize_then_simulate(capsys, tmp_path, monkeypatch):
    monkeypatch.delenv("QUNDO_SEED", raising=False)
    cfg = tmp_path / "c.toml"
    cfg.write_text("[optimizer]\nmax_evaluations = 40\nsuper_iterations = 1\n")
    out_pulse = tmp_path / "opt.json"
    code, out, _ = run(["--config", str(cfg), "optimize", "--target", "0.5,0.5,0,0,0",
                        "--duration-us", "10", "--out", str(out_pulse)], capsys)
    assert code == 0
    eps = json.loads(out)["epsilon"]
    code, out, _ = run(["simulate", str(out_pulse)], capsys)
    pops = np.array(json.loads(out)["final_populations"])
    assert abs(0.5 * np.abs(pops - [0.5, 0.5, 0, 0, 0]).sum() - eps) < 1e-9


def test_experiment_outputs(capsys, tmp_path, monkeypatch):
    monkeypatch.setenv("QUNDO_SEED", "5")
    cfg = tmp_path / "c.toml"
    cfg.write_text("[optimizer]\nmax_evaluations = 30\nsuper_iterations = 1\n"
                   "[experiment]\nduration_us = 5\ntargets = { A = 'A' }\n")
    out_dir = tmp_path / "exp1"
    code, _, _ = run(["exp1", "--config", str(cfg), "--out-dir", str(out_dir)], capsys)
    assert code == 0
    rep = json.loads((out_dir / "report.json").read_text())
    assert rep["seeds"] == [5]
    assert (out_dir / "errors.dat").exists()
    pulses = sorted((out_dir / "pulses").iterdir())
    assert len(pulses) == 3
    for f in pulses:
        assert Pulse.from_json(f.read_text()).to_json() == f.read_text().rstrip("\n")
    assert any((out_dir / "trajectories").iterdir())
    code, out, _ = run(["report", str(out_dir / "report.json")], capsys)
    assert code == 0 and "forward_backward" in out


def test_report_schema_stable(capsys, tmp_path, monkeypatch):
    monkeypatch.delenv("QUNDO_SEED", raising=False)
    cfg = tmp_path / "c.toml"
    cfg.write_text("[optimizer]\nmax_evaluations = 20\nsuper_iterations = 1\n"
                   "[experiment]\nduration_us = 4\ndurations_us = [2, 4]\ntau_past_us = 1\n"
                   "field_samples = 2\n")
    keys = {}
    for cmd in ("exp2", "exp3", "fig3"):
        code, _, _ = run([cmd, "--config", str(cfg), "--out-dir", str(tmp_path / cmd)], capsys)
        assert code == 0
        rep = json.loads((tmp_path / cmd / "report.json").read_text())
        keys[cmd] = (set(rep), set(rep["metadata"]), set(rep["records"][0]))
    assert keys["exp2"] == keys["exp3"] == keys["fig3"]
    sweep = (tmp_path / "exp2" / "sweep.dat").read_text().splitlines()
    assert sweep[1].split()[1:] == ["T_us", "eps_oc", "eps_naive", "oc_band_lo",
                                    "oc_band_hi", "naive_band_lo", "naive_band_hi"]
