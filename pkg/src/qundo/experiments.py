"""Forward/backward reversal experiments, truncation sweep and undo-to-past.

Every experiment starts from |+2><+2| (or the equal |+2>, |-2>
superposition for the transfer check), designs a forward pulse with
dCRAB, and compares two ways of going back: an optimised backward pulse
(OC arm) and the forward waveform played in reverse (naive arm).
"""

import hashlib
import json
import os
import zlib
from decimal import Decimal
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from .dynamics import (DEFAULT_DT, NoiseModel, basis_state, final_state, populations,
                       propagate_gksl_sequence, propagate_unitary, pure_state)
from .errors import DomainError, NumericalError, PreconditionError
from .hamiltonian import SystemModel
from .io import atomic_write_text
from .levels import TWO_PI
from .metrics import compare, uhlmann_fidelity
from .optimizer.dcrab import DEFAULT_CONFIG, Objective, dcrab_optimize, error_function
from .parallel import ordered_map
from .pulse import PAPER_CARRIER_HZ, PAPER_CLAMP_HZ, Pulse, naive_time_reverse, truncate

TARGETS = {
    "A": (0.5, 0.0, 0.0, 0.0, 0.5),
    "B": (0.0, 0.5, 0.0, 0.5, 0.0),
    "C": (0.5, 0.5, 0.0, 0.0, 0.0),
    "D": (0.2, 0.2, 0.2, 0.2, 0.2),
}
PARENT_DURATION = 100e-6
SWEEP_DURATIONS = (10e-6, 20e-6, 40e-6, 60e-6, 70e-6, 80e-6, 100e-6)
TAU_PAST = 33e-6
NOISE_BAND = (TWO_PI * 20.0, TWO_PI * 200.0, 1e-3)
REFERENCE_LAB_ACCURACY = 0.92
TRANSFER_TARGET = (0.0, 0.0, 0.0, 0.0, 1.0)
KINDS = ("forward_backward", "truncation_sweep", "undo_to_past", "figure3")


def initial_state():
    return basis_state(0)


def superposition_state():
    """(|+2> + |-2>) / sqrt 2."""
    return pure_state([1, 0, 0, 0, 1])


@dataclass(frozen=True)
class ExperimentSpec:
    """What to run and with which settings.

    ``durations`` lists the truncation points of a sweep (each at most
    ``duration``); ``tau_past`` is required for undo-to-past and must be
    shorter than ``duration``.  ``noise_band`` is (gamma_low, gamma_high,
    field_sigma) in rad/s, rad/s and gauss.
    """

    kind: str = "forward_backward"
    targets: tuple = tuple(TARGETS.items())
    duration: float = PARENT_DURATION
    durations: tuple = ()
    tau_past: float = None
    noise_band: tuple = None
    seeds: tuple = (0,)
    system: SystemModel = field(default_factory=SystemModel)
    optimizer: object = DEFAULT_CONFIG
    carrier_hz: float = PAPER_CARRIER_HZ
    clamp_hz: tuple = PAPER_CLAMP_HZ
    harmonics: int = 7
    dt: float = DEFAULT_DT
    sign_flip: bool = False
    field_samples: int = 32
    record_stride: int = 10
    cache_dir: str = None
    workers: int = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown experiment kind {self.kind!r}; expected one of {KINDS}")
        if isinstance(self.targets, dict):
            object.__setattr__(self, "targets", tuple(self.targets.items()))
        tg = tuple((str(n), tuple(float(x) for x in v)) for n, v in self.targets)
        object.__setattr__(self, "targets", tg)
        if not self.duration > 0:
            raise DomainError("duration must be positive")
        durs = tuple(float(d) for d in self.durations)
        if any(not 0 < d <= self.duration * (1 + 1e-12) for d in durs):
            raise DomainError("sweep durations must lie in (0, duration]")
        object.__setattr__(self, "durations", durs)
        if self.kind == "undo_to_past":
            if self.tau_past is None:
                raise PreconditionError("undo_to_past needs tau_past")
            if not 0 <= self.tau_past < self.duration:
                raise PreconditionError(
                    f"tau_past must lie in [0, {self.duration!r}) s, got {self.tau_past!r}")
        elif self.tau_past is not None:
            raise PreconditionError("tau_past is only meaningful for undo_to_past")
        if self.noise_band is not None:
            lo, hi, sig = (float(v) for v in self.noise_band)
            if not 0 <= lo <= hi or sig < 0:
                raise ValueError("noise_band must be (gamma_low <= gamma_high, field_sigma >= 0)")
            object.__setattr__(self, "noise_band", (lo, hi, sig))
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))
        if not self.seeds:
            raise ValueError("need at least one seed")


@dataclass
class ArmRecord:
    """Outcome of one forward pass and its two backward arms.

    ``backward_epsilon_oc`` / ``_naive`` compare the returned state with
    the state the arm aims for, on populations; ``roundtrip_fidelity`` and
    ``echo`` refer to the OC arm and the ``naive_*`` fields to the naive
    arm.  ``noise_band_*`` are [min, max] of epsilon over the two GKSL
    endpoint runs.  ``pulses`` and ``trajectories`` are not serialised by
    ``to_dict``.
    """

    name: str
    seed: int
    duration: float
    forward_epsilon: float = None
    backward_epsilon_oc: float = None
    backward_epsilon_naive: float = None
    roundtrip_fidelity: float = None
    echo: float = None
    naive_fidelity: float = None
    naive_echo: float = None
    noise_band_oc: tuple = None
    noise_band_naive: tuple = None
    final_populations: tuple = None
    evaluations: int = 0
    error: str = None
    pulses: dict = field(default_factory=dict)
    trajectories: dict = field(default_factory=dict)

    @property
    def key(self):
        return (self.name, self.seed, round(self.duration * 1e9))

    def to_dict(self):
        def band(b):
            return None if b is None else [float(b[0]), float(b[1])]

        return {
            "name": self.name, "seed": self.seed, "duration_us": self.duration * 1e6,
            "forward_epsilon": self.forward_epsilon,
            "backward_epsilon_oc": self.backward_epsilon_oc,
            "backward_epsilon_naive": self.backward_epsilon_naive,
            "roundtrip_fidelity": self.roundtrip_fidelity, "echo": self.echo,
            "naive_fidelity": self.naive_fidelity, "naive_echo": self.naive_echo,
            "noise_band_oc": band(self.noise_band_oc),
            "noise_band_naive": band(self.noise_band_naive),
            "final_populations": (None if self.final_populations is None
                                  else [float(p) for p in self.final_populations]),
            "evaluations": self.evaluations, "error": self.error,
            "pulses": sorted(self.pulses),
        }


@dataclass
class ExperimentReport:
    kind: str
    seeds: tuple
    records: list
    metadata: dict = field(default_factory=dict)

    def record(self, name, seed=None, duration=None):
        for r in self.records:
            if r.name == name and (seed is None or r.seed == seed) and (
                    duration is None or abs(r.duration - duration) < 1e-12):
                return r
        raise KeyError(name)

    def to_dict(self):
        return {"kind": self.kind, "seeds": list(self.seeds), "metadata": self.metadata,
                "records": [r.to_dict() for r in self.records]}

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


# --- helpers -----------------------------------------------------------------

def task_seed(seed, *labels):
    """Per-task seed expanded from the top-level ``seed`` and a stable label."""
    key = tuple(zlib.crc32(str(lab).encode()) for lab in labels)
    return int(np.random.SeedSequence(seed, spawn_key=key).generate_state(1)[0])


def _objective(spec, rho0, target, duration, baseline=None):
    return Objective(rho0, target, duration, spec.system, None, spec.carrier_hz,
                     tuple(spec.clamp_hz), spec.harmonics, spec.dt, baseline)


def _cache_key(spec, rho0, target, duration, seed):
    cfg = asdict(spec.optimizer)
    blob = json.dumps({
        "rho0": np.round(np.asarray(rho0), 15).astype(complex).view(float).tolist(),
        "target": list(target), "duration": duration, "seed": seed,
        "bias": spec.system.bias_field, "rabi": spec.system.coupling.rabi_frequency,
        "drift": None if spec.system.drift is None else list(np.asarray(spec.system.drift)),
        "carrier": spec.carrier_hz, "clamp": list(spec.clamp_hz),
        "harmonics": spec.harmonics, "dt": spec.dt, "optimizer": cfg,
    }, sort_keys=True, default=str)
    return hashlib.sha256(blob.encode()).hexdigest()[:20]


def optimize_forward(spec, name, rho0, target, seed, duration=None):
    """Forward pulse for ``target``; read from / written to the disk cache.

    Returns (pulse, epsilon, evaluation count); the count is 0 on a cache hit.
    """
    duration = spec.duration if duration is None else duration
    cfg = replace(spec.optimizer, rng_seed=task_seed(seed, "forward", name))
    path = None
    if spec.cache_dir is not None:
        path = Path(spec.cache_dir) / f"forward_{name}_{_cache_key(spec, rho0, target, duration, cfg.rng_seed)}.json"
        if path.exists():
            data = json.loads(path.read_text(), parse_float=Decimal)
            return Pulse.from_dict(data["pulse"]), float(data["epsilon"]), 0
    obj = _objective(spec, rho0, target, duration)
    run = dcrab_optimize(obj, cfg)
    if path is not None:
        os.makedirs(path.parent, exist_ok=True)
        body = run.resulting_pulse.to_json().replace("\n", "\n  ")
        atomic_write_text(path, f'{{\n  "epsilon": {run.best_epsilon!r},\n  "pulse": {body}\n}}\n')
    return run.resulting_pulse, run.best_epsilon, run.evaluation_count


def optimize_backward(spec, name, start, goal, duration, seed, replay):
    """Backward OC pulse from ``start`` to the populations of ``goal``.

    The search is stacked on whichever of the bare carrier and the naive
    ``replay`` waveform does better, so the OC arm is never worse than the
    naive one.
    """
    goal_pops = np.clip(populations(goal), 0.0, None)
    goal_pops = goal_pops / goal_pops.sum()
    cfg = replace(spec.optimizer,
                  rng_seed=task_seed(seed, "backward", name, round(duration * 1e9)))
    plain = _objective(spec, start, goal_pops, duration)
    warm = _objective(spec, start, goal_pops, duration, baseline=replay)
    obj = warm if warm.error(replay) < plain.error(plain.start_pulse()) else plain
    run = dcrab_optimize(obj, cfg)
    return run.resulting_pulse, run.evaluation_count + 2


def _noise_band(spec, rho0, pulses, goal, seed, name):
    if spec.noise_band is None:
        return None
    lo, hi, sig = spec.noise_band
    goal_pops = populations(goal)
    eps = []
    for g in (lo, hi):
        noise = NoiseModel.uniform(g, sig, spec.field_samples,
                                   task_seed(seed, "noise", name))
        rho = propagate_gksl_sequence(rho0, pulses, spec.system, noise, spec.dt)
        eps.append(error_function(rho, goal_pops))
    return (min(eps), max(eps))


def _roundtrip(spec, record, rho0, forward, goal, seed):
    """Run ``forward`` from ``rho0`` and fill both backward arms of ``record``.

    Both arms last as long as the forward pulse and aim for ``goal``.
    """
    T = forward.duration
    model = spec.system
    end = final_state(rho0, forward, model, spec.dt)
    naive = naive_time_reverse(forward, spec.sign_flip)
    oc, evals = optimize_backward(spec, record.name, end, goal, T, seed, naive)
    back_oc = final_state(end, oc, model, spec.dt)
    back_naive = final_state(end, naive, model, spec.dt)
    c_oc = compare(goal, back_oc, goal)
    c_nv = compare(goal, back_naive, goal)
    record.backward_epsilon_oc = c_oc.epsilon
    record.backward_epsilon_naive = c_nv.epsilon
    record.roundtrip_fidelity = c_oc.uhlmann_fidelity
    record.echo = c_oc.loschmidt_echo
    record.naive_fidelity = c_nv.uhlmann_fidelity
    record.naive_echo = c_nv.loschmidt_echo
    record.final_populations = tuple(populations(back_oc))
    record.evaluations += evals
    record.pulses.update(forward=forward, backward_oc=oc, backward_naive=naive)
    record.noise_band_oc = _noise_band(spec, rho0, [forward, oc], goal, seed, record.name)
    record.noise_band_naive = _noise_band(spec, rho0, [forward, naive], goal, seed, record.name)
    return end


def _guarded(fn):
    """Run one task; an optimiser or integrator failure is stored on the record."""
    def run(task):
        record = task[0]
        try:
            fn(*task)
        except (NumericalError, FloatingPointError) as exc:
            record.error = f"{type(exc).__name__}: {exc}"
        return record
    return run


def _finish(spec, records, metadata):
    records = sorted(records, key=lambda r: r.key)
    meta = dict.fromkeys(("accuracy", "mean_roundtrip_fidelity", "noise_band", "target",
                          "tau1_us", "tau2_us"))
    meta["reference_lab_accuracy"] = REFERENCE_LAB_ACCURACY
    meta.update({"backward_goal": "populations of the simulated state reached by the forward pulse",
            "naive_reversal": "g(t) = -f(T - t) modulation" if spec.sign_flip else "g(t) = f(T - t)",
            "seeds": list(spec.seeds), "duration_us": spec.duration * 1e6})
    meta.update(metadata)
    return ExperimentReport(spec.kind, spec.seeds, records, meta)


# --- experiments -------------------------------------------------------------

def run_forward_backward(spec):
    """Forward to each target, then back to |+2> by the OC and naive arms."""
    rho0 = initial_state()

    def task(record, target):
        forward, eps, n = optimize_forward(spec, record.name, rho0, target, record.seed)
        record.forward_epsilon = eps
        record.evaluations = n
        mid = propagate_unitary(rho0, forward, spec.system, spec.dt, spec.record_stride)
        record.trajectories["forward"] = mid
        _roundtrip(spec, record, rho0, forward, rho0, record.seed)
        record.trajectories["backward_oc"] = propagate_unitary(
            mid.final, record.pulses["backward_oc"], spec.system, spec.dt, spec.record_stride)

    tasks = [(ArmRecord(name, seed, spec.duration), target)
             for seed in spec.seeds for name, target in spec.targets]
    records = ordered_map(_guarded(task), tasks, spec.workers)
    fids = [r.roundtrip_fidelity for r in records if r.roundtrip_fidelity is not None]
    return _finish(spec, records, {
        "mean_roundtrip_fidelity": float(np.mean(fids)) if fids else None})


def run_truncation_sweep(spec):
    """Interrupt the target-A forward pulse at each duration and reverse from there."""
    rho0 = initial_state()
    name, target = spec.targets[0]
    durations = spec.durations or SWEEP_DURATIONS
    parents = {seed: optimize_forward(spec, name, rho0, target, seed) for seed in spec.seeds}

    def task(record):
        parent, eps, _ = parents[record.seed]
        piece = truncate(parent, record.duration)
        record.forward_epsilon = eps
        _roundtrip(spec, record, rho0, piece, rho0, record.seed)

    tasks = [(ArmRecord(name, seed, d),) for seed in spec.seeds for d in durations]
    records = ordered_map(_guarded(task), tasks, spec.workers)
    return _finish(spec, records, {"target": name, "noise_band": (
        None if spec.noise_band is None else list(spec.noise_band))})


def run_undo_to_past(spec):
    """Go back from the end of the target-A pulse to the state it passed at tau_past.

    The OC arm is a pulse of duration T - tau_past optimised from the end
    state towards the populations of the past state; the naive arm replays
    the last T - tau_past of the forward waveform backwards.
    """
    if spec.tau_past is None or not 0 <= spec.tau_past < spec.duration:
        raise PreconditionError("tau_past must lie in [0, duration)")
    rho0 = initial_state()
    name, target = spec.targets[0]
    tau1 = spec.tau_past
    tau2 = spec.duration - tau1
    if abs((tau1 + tau2) - spec.duration) > 1e-15:
        raise AssertionError("tau1 + tau2 differs from the forward duration")

    def task(record):
        forward, eps, n = optimize_forward(spec, name, rho0, target, record.seed)
        record.forward_epsilon = eps
        record.evaluations = n
        past = rho0 if tau1 == 0 else final_state(rho0, truncate(forward, tau1), spec.system,
                                                  spec.dt)
        end = final_state(rho0, forward, spec.system, spec.dt)
        naive = truncate(naive_time_reverse(forward, spec.sign_flip), tau2)
        oc, evals = optimize_backward(spec, name, end, past, tau2, record.seed, naive)
        back_oc = final_state(end, oc, spec.system, spec.dt)
        back_nv = final_state(end, naive, spec.system, spec.dt)
        c = compare(past, back_oc, past)
        record.backward_epsilon_oc = c.epsilon
        record.backward_epsilon_naive = compare(past, back_nv).epsilon
        record.roundtrip_fidelity = c.uhlmann_fidelity
        record.echo = c.loschmidt_echo
        record.naive_fidelity = uhlmann_fidelity(past, back_nv)
        record.final_populations = tuple(populations(back_oc))
        record.evaluations += evals
        record.pulses.update(forward=forward, backward_oc=oc, backward_naive=naive)
        record.noise_band_oc = _noise_band(spec, end, [oc], past, record.seed, name)

    tasks = [(ArmRecord(name, seed, tau2),) for seed in spec.seeds]
    records = ordered_map(_guarded(task), tasks, spec.workers)
    acc = [1.0 - r.backward_epsilon_oc for r in records if r.backward_epsilon_oc is not None]
    return _finish(spec, records, {"target": name, "tau1_us": tau1 * 1e6, "tau2_us": tau2 * 1e6,
                                   "accuracy": float(np.mean(acc)) if acc else None})


def run_figure3_check(spec):
    """Transfer (|+2> + |-2>)/sqrt 2 into |-2> and keep the population trajectory."""
    rho0 = superposition_state()
    goal = basis_state(4)

    def task(record):
        pulse, eps, n = optimize_forward(spec, "transfer", rho0, TRANSFER_TARGET, record.seed)
        traj = propagate_unitary(rho0, pulse, spec.system, spec.dt, spec.record_stride)
        record.forward_epsilon = eps
        record.evaluations = n
        record.roundtrip_fidelity = uhlmann_fidelity(goal, traj.final)
        record.final_populations = tuple(populations(traj.final))
        record.pulses["forward"] = pulse
        record.trajectories["forward"] = traj

    tasks = [(ArmRecord("transfer", seed, spec.duration),) for seed in spec.seeds]
    records = ordered_map(_guarded(task), tasks, spec.workers)
    return _finish(spec, records, {"target": "transfer"})


RUNNERS = {
    "forward_backward": run_forward_backward,
    "truncation_sweep": run_truncation_sweep,
    "undo_to_past": run_undo_to_past,
    "figure3": run_figure3_check,
}


def run_experiment(spec):
    return RUNNERS[spec.kind](spec)
