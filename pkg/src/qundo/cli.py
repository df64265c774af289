"""Command-line entry point ``qundo``.

Exit status is 0 on success, 1 when a run fails (with one JSON error line
on stderr) and 2 on usage errors.
"""

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import experiments as ex
from .config import ConfigError, parse_config
from .dynamics import (NoiseModel, basis_state, check_density_matrix, populations,
                       propagate_gksl, propagate_unitary, pure_state)
from .errors import DomainError, InvalidStateError, NumericalError, PreconditionError
from .io import (atomic_write_json, atomic_write_text, csv_text, gnuplot_text,
                 state_from_dict, state_to_dict, write_trajectory_csv)
from .levels import TWO_PI, breit_rabi_levels
from .optimizer.dcrab import Objective, dcrab_optimize
from .parallel import worker_count
from .pulse import Pulse

EXPERIMENT_COMMANDS = {
    "exp1": "forward_backward",
    "exp2": "truncation_sweep",
    "exp3": "undo_to_past",
    "fig3": "figure3",
}


class UsageError(Exception):
    pass


def _status(msg):
    print(msg, flush=True)


def _floats(text):
    try:
        return [float(v) for v in text.replace(",", " ").split()]
    except ValueError:
        raise UsageError(f"expected a list of numbers, got {text!r}") from None


def _state_arg(text):
    """|+2>: "plus2"; equal |+-2> superposition: "superposition"; index "0".."4";
    populations "p0,...,p4" (diagonal state) or a JSON file with re/im."""
    if text in ("plus2", "+2"):
        return basis_state(0)
    if text == "superposition":
        return pure_state([1, 0, 0, 0, 1])
    if text.isdigit():
        i = int(text)
        if not 0 <= i < 5:
            raise UsageError("basis index must be 0..4")
        return basis_state(i)
    if os.path.exists(text):
        return check_density_matrix(state_from_dict(json.loads(Path(text).read_text())))
    p = _floats(text)
    if len(p) != 5:
        raise UsageError("state must be plus2, superposition, an index, 5 populations or a file")
    return check_density_matrix(np.diag(p).astype(complex))


def _load_pulse(path):
    return Pulse.from_json(Path(path).read_text())


# --- subcommands -------------------------------------------------------------

def cmd_levels(args, cfg):
    lv = breit_rabi_levels(args.field_gauss)
    rows = [(m, e) for m, e in zip((2, 1, 0, -1, -2), lv.in_khz())]
    text = csv_text(("m_F", "energy_khz"), rows)
    if args.out:
        atomic_write_text(args.out, text)
    sys.stdout.write(text)


def cmd_pulse_eval(args, cfg):
    pulse = _load_pulse(args.pulse)
    if args.t_us:
        t = np.array(_floats(args.t_us)) / 1e6
    else:
        t = np.linspace(0.0, pulse.duration, args.samples)
    f = pulse.evaluate(t) / TWO_PI / 1e3
    text = csv_text(("t_us", "f_khz"), zip(t * 1e6, f))
    if args.out:
        atomic_write_text(args.out, text)
    sys.stdout.write(text)


def cmd_simulate(args, cfg):
    pulse = _load_pulse(args.pulse)
    rho0 = _state_arg(args.initial)
    model = cfg.system.model()
    dt = cfg.system.dt_ns / 1e9
    if args.gamma_hz is not None or args.field_sigma_gauss:
        noise = NoiseModel.uniform(TWO_PI * (args.gamma_hz or 0.0), args.field_sigma_gauss,
                                   cfg.experiment.field_samples, cfg.optimizer.rng_seed)
        traj = propagate_gksl(rho0, pulse, model, noise, dt, args.record_stride,
                              workers=args.threads)
    else:
        traj = propagate_unitary(rho0, pulse, model, dt, args.record_stride)
    result = {"final_populations": populations(traj.final).tolist(),
              "final_state": state_to_dict(traj.final), "duration_us": pulse.duration * 1e6}
    if args.out:
        write_trajectory_csv(args.out, traj)
    if args.state_out:
        atomic_write_json(args.state_out, result)
    print(json.dumps({"final_populations": result["final_populations"]}))


def cmd_optimize(args, cfg):
    rho0 = _state_arg(args.initial)
    target = _floats(args.target)
    if len(target) != 5:
        raise UsageError("--target needs five populations")
    sy = cfg.system
    obj = Objective(rho0, target, args.duration_us / 1e6, sy.model(), None,
                    sy.carrier_khz * 1e3, tuple(c * 1e3 for c in sy.clamp_khz),
                    sy.harmonics, sy.dt_ns / 1e9)
    run = dcrab_optimize(obj, cfg.optimizer)
    atomic_write_text(args.out, run.resulting_pulse.to_json() + "\n")
    summary = {"epsilon": run.best_epsilon, "evaluations": run.evaluation_count,
               "stopped_by": run.converged, "seed": cfg.optimizer.rng_seed,
               "pulse": str(args.out)}
    if args.history:
        atomic_write_text(args.history, csv_text(("evaluation", "best_epsilon"), run.history))
    print(json.dumps(summary))


def _arm_label(r):
    return f"{r.name}_seed{r.seed}_T{r.duration * 1e6:g}us"


def write_experiment(report, out_dir, formats):
    """Write the report JSON, pulses, trajectories and plot data under ``out_dir``."""
    out = Path(out_dir)
    atomic_write_json(out / "report.json", report.to_dict())
    for r in report.records:
        label = _arm_label(r)
        if "json" in formats:
            for arm, pulse in sorted(r.pulses.items()):
                atomic_write_text(out / "pulses" / f"{label}_{arm}.json", pulse.to_json() + "\n")
        if "csv" in formats:
            for arm, traj in sorted(r.trajectories.items()):
                write_trajectory_csv(out / "trajectories" / f"{label}_{arm}.csv", traj)
    if "gnuplot" in formats:
        name, comment, header, rows = _plot_data(report)
        atomic_write_text(out / name, gnuplot_text(comment, header, rows))


def _plot_data(report):
    recs = report.records
    if report.kind == "forward_backward":
        return ("errors.dat", "per target: OC and naive round-trip error",
                ("index", "target", "eps_oc", "eps_naive", "fidelity_oc"),
                [(i, r.name, r.backward_epsilon_oc, r.backward_epsilon_naive,
                  r.roundtrip_fidelity) for i, r in enumerate(recs)])
    if report.kind == "truncation_sweep":
        def b(x, i):
            return None if x is None else x[i]
        return ("sweep.dat", "error vs pulse length; band columns are GKSL [min, max]",
                ("T_us", "eps_oc", "eps_naive", "oc_band_lo", "oc_band_hi",
                 "naive_band_lo", "naive_band_hi"),
                [(r.duration * 1e6, r.backward_epsilon_oc, r.backward_epsilon_naive,
                  b(r.noise_band_oc, 0), b(r.noise_band_oc, 1),
                  b(r.noise_band_naive, 0), b(r.noise_band_naive, 1)) for r in recs])
    if report.kind == "undo_to_past":
        return ("undo.dat", "undo to the past state: OC and naive error",
                ("tau2_us", "eps_oc", "eps_naive", "fidelity_oc"),
                [(r.duration * 1e6, r.backward_epsilon_oc, r.backward_epsilon_naive,
                  r.roundtrip_fidelity) for r in recs])
    rows = []
    traj = recs[0].trajectories.get("forward") if recs else None
    if traj is not None:
        rows = [(t * 1e6, *p) for t, p in zip(traj.times, traj.populations)]
    return ("populations.dat", "population of each sub-level during the transfer pulse",
            ("t_us", "p_plus2", "p_plus1", "p_0", "p_minus1", "p_minus2"), rows)


def cmd_experiment(args, cfg):
    kind = EXPERIMENT_COMMANDS[args.command]
    out_dir = Path(args.out_dir or cfg.io.out_dir)
    cache = cfg.io.cache_dir or str(out_dir / "cache")
    spec = cfg.spec(kind, workers=worker_count(args.threads), cache_dir=cache)
    _status(f"running {args.command} ({kind}), seeds {list(spec.seeds)}")
    report = ex.run_experiment(spec)
    write_experiment(report, out_dir, cfg.io.formats)
    for r in report.records:
        _status(json.dumps({"name": r.name, "duration_us": r.duration * 1e6,
                            "forward_epsilon": r.forward_epsilon,
                            "backward_epsilon_oc": r.backward_epsilon_oc,
                            "backward_epsilon_naive": r.backward_epsilon_naive,
                            "error": r.error}))
    _status(f"wrote {out_dir / 'report.json'}")
    if any(r.error for r in report.records):
        raise NumericalError("one or more arms failed; see report.json")


def cmd_report(args, cfg):
    data = json.loads(Path(args.report).read_text())
    print(f"kind: {data['kind']}  seeds: {data['seeds']}")
    cols = ("name", "duration_us", "forward_epsilon", "backward_epsilon_oc",
            "backward_epsilon_naive", "roundtrip_fidelity", "echo")
    print("  ".join(f"{c:>22}" for c in cols))
    for r in data["records"]:
        vals = []
        for c in cols:
            v = r.get(c)
            vals.append(f"{v:>22.6g}" if isinstance(v, float) else f"{str(v):>22}")
        print("  ".join(vals))
    for k, v in sorted(data.get("metadata", {}).items()):
        print(f"{k}: {v}")


# --- parser ------------------------------------------------------------------

def build_parser():
    p = argparse.ArgumentParser(prog="qundo", description="Optimal time reversal on the "
                                "87Rb F=2 manifold: simulation, pulse design, experiments.")
    p.add_argument("--config", help="TOML run configuration ('-' for stdin)")
    p.add_argument("--threads", type=int, default=None,
                   help="worker threads (default: QUNDO_THREADS or all cores)")
    sub = p.add_subparsers(dest="command", metavar="command")

    s = sub.add_parser("levels", help="Zeeman sub-level energies as CSV")
    s.add_argument("--field-gauss", type=float, default=6.179)
    s.add_argument("--out")
    s.set_defaults(func=cmd_levels)

    s = sub.add_parser("pulse", help="pulse utilities")
    psub = s.add_subparsers(dest="pulse_command", metavar="action")
    e = psub.add_parser("eval", help="evaluate the clamped drive frequency")
    e.add_argument("pulse", help="pulse JSON file")
    e.add_argument("--t-us", help="comma-separated times in microseconds")
    e.add_argument("--samples", type=int, default=101)
    e.add_argument("--out")
    e.set_defaults(func=cmd_pulse_eval)

    s = sub.add_parser("simulate", help="propagate a state under a pulse")
    s.add_argument("pulse", help="pulse JSON file")
    s.add_argument("--initial", default="plus2")
    s.add_argument("--gamma-hz", type=float, default=None, help="dephasing rate / 2pi")
    s.add_argument("--field-sigma-gauss", type=float, default=0.0)
    s.add_argument("--record-stride", type=int, default=10)
    s.add_argument("--out", help="trajectory CSV")
    s.add_argument("--state-out", help="final state JSON")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("optimize", help="design a pulse with dCRAB")
    s.add_argument("--target", required=True, help="five target populations")
    s.add_argument("--initial", default="plus2")
    s.add_argument("--duration-us", type=float, default=100.0)
    s.add_argument("--out", required=True, help="pulse JSON file")
    s.add_argument("--history", help="CSV of best epsilon per evaluation")
    s.set_defaults(func=cmd_optimize)

    helps = {"exp1": "forward and backward to each target",
             "exp2": "truncation sweep with GKSL noise band",
             "exp3": "undo to a past state", "fig3": "superposition to |-2> transfer"}
    for name, text in helps.items():
        s = sub.add_parser(name, help=text)
        s.add_argument("--config", dest="sub_config", help="TOML run configuration")
        s.add_argument("--out-dir")
        s.set_defaults(func=cmd_experiment)

    s = sub.add_parser("report", help="print a report JSON as a table")
    s.add_argument("report")
    s.set_defaults(func=cmd_report)
    return p


def main(argv=None):
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    if not argv:
        parser.print_usage(sys.stderr)
        return 2
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if getattr(args, "func", None) is None:
        parser.print_usage(sys.stderr)
        return 2
    try:
        cfg = parse_config(getattr(args, "sub_config", None) or args.config)
        args.func(args, cfg)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(json.dumps({"error": "usage", "message": str(exc)}), file=sys.stderr)
        return 2
    except (ConfigError, DomainError, InvalidStateError, PreconditionError, NumericalError,
            OSError, ValueError, KeyError) as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
