"""TOML run configuration.

Every physical quantity carries its unit in the key name (``_khz``,
``_hz``, ``_gauss``, ``_us``, ``_ns``).  Unknown keys are rejected, and a
key that names a known quantity with a missing or different unit gets a
message pointing at the expected spelling.
"""

import os
import sys
from dataclasses import dataclass, field, fields, replace

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .experiments import NOISE_BAND, TARGETS, ExperimentSpec
from .hamiltonian import PAPER_FIELD_GAUSS, ControlCoupling, SystemModel
from .levels import TWO_PI
from .optimizer.dcrab import DEFAULT_CONFIG
from .optimizer.subplex import OptimizerConfig
from .pulse import DEFAULT_HARMONICS, PAPER_CARRIER_HZ, PAPER_CLAMP_HZ


class ConfigError(ValueError):
    """The configuration document is malformed or names unknown keys."""


SECTIONS = ("system", "optimizer", "experiment", "io")

SYSTEM_KEYS = {"bias_field_gauss", "rabi_khz", "carrier_khz", "clamp_khz", "dt_ns",
               "harmonics"}
OPTIMIZER_KEYS = {f.name for f in fields(OptimizerConfig)}
EXPERIMENT_KEYS = {"targets", "duration_us", "durations_us", "tau_past_us", "noise_band",
                   "noise_gamma_hz", "noise_field_sigma_gauss", "field_samples", "seeds",
                   "sign_flip", "record_stride"}
IO_KEYS = {"out_dir", "formats", "cache_dir"}
FORMATS = ("json", "csv", "gnuplot")
UNITS = ("khz", "hz", "gauss", "us", "ns", "s", "mhz", "mgauss", "ms", "tesla", "g")


@dataclass(frozen=True)
class SystemSettings:
    bias_field_gauss: float = PAPER_FIELD_GAUSS
    rabi_khz: float = 60.0
    carrier_khz: float = PAPER_CARRIER_HZ / 1e3
    clamp_khz: tuple = tuple(f / 1e3 for f in PAPER_CLAMP_HZ)
    dt_ns: float = 10.0
    harmonics: int = DEFAULT_HARMONICS

    def model(self):
        return SystemModel(self.bias_field_gauss, ControlCoupling(TWO_PI * self.rabi_khz * 1e3))


@dataclass(frozen=True)
class ExperimentSettings:
    targets: dict = None
    duration_us: float = 100.0
    durations_us: tuple = (10.0, 20.0, 40.0, 60.0, 70.0, 80.0, 100.0)
    tau_past_us: float = 33.0
    noise_band: bool = None
    noise_gamma_hz: tuple = (NOISE_BAND[0] / TWO_PI, NOISE_BAND[1] / TWO_PI)
    noise_field_sigma_gauss: float = NOISE_BAND[2]
    field_samples: int = 32
    seeds: tuple = (0,)
    sign_flip: bool = False
    record_stride: int = 10


@dataclass(frozen=True)
class IOSettings:
    out_dir: str = "out"
    formats: tuple = FORMATS
    cache_dir: str = None


@dataclass(frozen=True)
class RunConfig:
    """Validated configuration; the defaults are the reference setup."""

    system: SystemSettings = field(default_factory=SystemSettings)
    optimizer: OptimizerConfig = DEFAULT_CONFIG
    experiment: ExperimentSettings = field(default_factory=ExperimentSettings)
    io: IOSettings = field(default_factory=IOSettings)

    def with_seed(self, seed):
        seed = int(seed)
        return replace(self, optimizer=replace(self.optimizer, rng_seed=seed),
                       experiment=replace(self.experiment, seeds=(seed,)))

    def spec(self, kind, workers=None, cache_dir=None):
        """ExperimentSpec for ``kind`` with the per-kind defaults filled in."""
        ex = self.experiment
        sy = self.system
        if ex.targets is not None:
            targets = tuple(ex.targets.items())
        elif kind == "forward_backward":
            targets = tuple(TARGETS.items())
        else:
            targets = (("A", TARGETS["A"]),)
        band = ex.noise_band if ex.noise_band is not None else kind == "truncation_sweep"
        noise = None
        if band:
            lo, hi = ex.noise_gamma_hz
            noise = (TWO_PI * lo, TWO_PI * hi, ex.noise_field_sigma_gauss)
        return ExperimentSpec(
            kind=kind, targets=targets, duration=ex.duration_us / 1e6,
            durations=tuple(d / 1e6 for d in ex.durations_us) if kind == "truncation_sweep" else (),
            tau_past=ex.tau_past_us / 1e6 if kind == "undo_to_past" else None,
            noise_band=noise, seeds=ex.seeds, system=sy.model(), optimizer=self.optimizer,
            carrier_hz=sy.carrier_khz * 1e3, clamp_hz=tuple(c * 1e3 for c in sy.clamp_khz),
            harmonics=sy.harmonics, dt=sy.dt_ns / 1e9, sign_flip=ex.sign_flip,
            field_samples=ex.field_samples, record_stride=ex.record_stride,
            cache_dir=cache_dir if cache_dir is not None else self.io.cache_dir,
            workers=workers)


def _unit_hint(key, allowed):
    """Expected spelling if ``key`` is a known quantity with the wrong unit."""
    stem = key
    for u in UNITS:
        if key.endswith("_" + u):
            stem = key[: -len(u) - 1]
            break
    for a in sorted(allowed):
        for u in UNITS:
            if a.endswith("_" + u) and a[: -len(u) - 1] == stem:
                return a
    return None


def _check_keys(section, table, allowed):
    unknown = sorted(set(table) - allowed)
    if not unknown:
        return
    hints = []
    for k in unknown:
        h = _unit_hint(k, allowed)
        hints.append(f"{k} (unit suffix: use {h})" if h else k)
    raise ConfigError(f"unknown keys in [{section}]: " + ", ".join(hints))


def _number(section, key, value, positive=False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"[{section}] {key} must be a number, got {value!r}")
    if positive and not value > 0:
        raise ConfigError(f"[{section}] {key} must be positive")
    return float(value)


def _pair(section, key, value):
    if not isinstance(value, (list, tuple)) or len(value) != 2:
        raise ConfigError(f"[{section}] {key} must be a two-element array")
    return tuple(_number(section, key, v) for v in value)


def from_dict(doc):
    """Validate a parsed TOML document and apply defaults."""
    if not isinstance(doc, dict):
        raise ConfigError("configuration must be a table")
    _check_keys("top level", doc, set(SECTIONS))
    for s in SECTIONS:
        if s in doc and not isinstance(doc[s], dict):
            raise ConfigError(f"[{s}] must be a table")

    sy = dict(doc.get("system", {}))
    _check_keys("system", sy, SYSTEM_KEYS)
    for k in ("bias_field_gauss", "rabi_khz", "carrier_khz", "dt_ns"):
        if k in sy:
            sy[k] = _number("system", k, sy[k], positive=(k != "bias_field_gauss"))
    if "clamp_khz" in sy:
        sy["clamp_khz"] = _pair("system", "clamp_khz", sy["clamp_khz"])
    if "harmonics" in sy:
        if not isinstance(sy["harmonics"], int) or sy["harmonics"] < 1:
            raise ConfigError("[system] harmonics must be a positive integer")
    system = SystemSettings(**sy)

    op = dict(doc.get("optimizer", {}))
    _check_keys("optimizer", op, OPTIMIZER_KEYS)
    if "subspace_size_range" in op:
        op["subspace_size_range"] = tuple(int(v) for v in op["subspace_size_range"])
    try:
        optimizer = replace(DEFAULT_CONFIG, **op)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"[optimizer] {exc}") from None

    ex = dict(doc.get("experiment", {}))
    _check_keys("experiment", ex, EXPERIMENT_KEYS)
    if "targets" in ex:
        t = ex["targets"]
        if not isinstance(t, dict) or not t:
            raise ConfigError("[experiment] targets must be a table of name = [5 populations]")
        out = {}
        for name, v in t.items():
            if isinstance(v, str) and v in TARGETS:
                v = TARGETS[v]
            if not isinstance(v, (list, tuple)) or len(v) != 5:
                raise ConfigError(f"[experiment] target {name!r} needs five populations")
            out[name] = tuple(_number("experiment", f"targets.{name}", x) for x in v)
        ex["targets"] = out
    for k in ("duration_us", "tau_past_us", "noise_field_sigma_gauss"):
        if k in ex:
            ex[k] = _number("experiment", k, ex[k])
    if "durations_us" in ex:
        ex["durations_us"] = tuple(_number("experiment", "durations_us", d, True)
                                   for d in ex["durations_us"])
    if "noise_gamma_hz" in ex:
        ex["noise_gamma_hz"] = _pair("experiment", "noise_gamma_hz", ex["noise_gamma_hz"])
    if "seeds" in ex:
        ex["seeds"] = tuple(int(s) for s in ex["seeds"])
    experiment = ExperimentSettings(**ex)

    io = dict(doc.get("io", {}))
    _check_keys("io", io, IO_KEYS)
    if "formats" in io:
        bad = sorted(set(io["formats"]) - set(FORMATS))
        if bad:
            raise ConfigError(f"[io] unknown formats {bad}; expected a subset of {list(FORMATS)}")
        io["formats"] = tuple(io["formats"])
    return RunConfig(system, optimizer, experiment, IOSettings(**io))


def parse_config(source=None, env=None):
    """Parse TOML from a path, an open file, a string or stdin ("-").

    ``None`` gives the default configuration.  ``QUNDO_SEED`` in ``env``
    (default ``os.environ``) overrides every seed.
    """
    env = os.environ if env is None else env
    if source is None:
        doc = {}
    else:
        try:
            if source == "-":
                text = sys.stdin.read()
            elif hasattr(source, "read"):
                text = source.read()
            else:
                with open(source, encoding="utf-8") as fh:
                    text = fh.read()
            if isinstance(text, bytes):
                text = text.decode()
            doc = tomllib.loads(text)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"invalid TOML: {exc}") from None
    cfg = from_dict(doc)
    if env.get("QUNDO_SEED"):
        cfg = cfg.with_seed(int(env["QUNDO_SEED"]))
    return cfg


def parse_config_text(text, env=None):
    return parse_config(_Text(text), env)


class _Text:
    def __init__(self, text):
        self.text = text

    def read(self):
        return self.text
