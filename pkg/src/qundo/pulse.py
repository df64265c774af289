"""Frequency-modulated RF control pulses.

A pulse is an analytic drive frequency

    f(t) = w0 * [1 + sum_h 2 Re(A_h (1 + i nu_h tau_h) exp(i nu_h tau_h))]

clamped to a hardware window, where each harmonic carries an affine time
map tau_h = offset_h + sign_h * t.  Plain pulses use tau = t.  The map lets
a pulse be replayed backwards, and lets corrections be stacked on top of
a time-reversed waveform, without resampling anything.  The implicit
conjugate partner (-k, -nu, conj(A)) of every stored harmonic is why the
sum carries a factor 2 Re.

Frequencies are stored in cyclic units (Hz) so the JSON form in kHz and
microseconds converts by decimal shifts only, which round-trips exactly.
"""

import json
from dataclasses import dataclass, field, replace
from decimal import Decimal
from typing import NamedTuple

import numpy as np

from . import _kernels
from .errors import DomainError
from .levels import TWO_PI

PAPER_CARRIER_HZ = 4375.0e3
PAPER_CLAMP_HZ = (4150.0e3, 4600.0e3)
DEFAULT_HARMONICS = 7


class Harmonic(NamedTuple):
    k: int
    nu_hz: float
    amplitude: complex
    t_offset: float = 0.0
    t_sign: float = 1.0


@dataclass(frozen=True)
class Pulse:
    """Analytic drive-frequency waveform on [0, duration].

    Attributes:
        duration: pulse length T in seconds.
        carrier_hz: carrier w0 / 2pi.
        clamp_hz: (f_min, f_max) / 2pi; evaluated values are saturated here.
        harmonics: modulation terms, conjugate partners implicit.
    """

    duration: float
    carrier_hz: float = PAPER_CARRIER_HZ
    clamp_hz: tuple = PAPER_CLAMP_HZ
    harmonics: tuple = ()
    _arrays: tuple = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        if not (np.isfinite(self.duration) and self.duration > 0):
            raise DomainError(f"pulse duration must be positive, got {self.duration!r}")
        lo, hi = (float(v) for v in self.clamp_hz)
        if not lo < hi:
            raise DomainError(f"clamp window must satisfy f_min < f_max, got {self.clamp_hz!r}")
        object.__setattr__(self, "clamp_hz", (lo, hi))
        hs = tuple(Harmonic(int(h.k), float(h.nu_hz), complex(h.amplitude),
                            float(h.t_offset), float(h.t_sign)) for h in self.harmonics)
        if any(h.t_sign not in (1.0, -1.0) for h in hs):
            raise ValueError("harmonic time sign must be +1 or -1")
        object.__setattr__(self, "harmonics", hs)
        amps = np.array([h.amplitude for h in hs], dtype=complex)
        arrays = (np.ascontiguousarray(amps.real), np.ascontiguousarray(amps.imag),
                  np.array([TWO_PI * h.nu_hz for h in hs], dtype=float),
                  np.array([h.t_offset for h in hs], dtype=float),
                  np.array([h.t_sign for h in hs], dtype=float))
        object.__setattr__(self, "_arrays", arrays)

    @classmethod
    def from_coefficients(cls, coeffs, duration, nu_hz=None, baseline=None,
                          carrier_hz=PAPER_CARRIER_HZ, clamp_hz=PAPER_CLAMP_HZ):
        """Build a pulse from a real vector (Re A_1, Im A_1, Re A_2, ...).

        Harmonic k gets frequency ``nu_hz[k-1]`` (default k / T).  With a
        ``baseline`` pulse, the new harmonics are added on top of it and
        the baseline's carrier and clamp are kept.
        """
        coeffs = np.asarray(coeffs, dtype=float)
        if coeffs.ndim != 1 or coeffs.size % 2:
            raise ValueError("coefficient vector must hold (re, im) pairs")
        n = coeffs.size // 2
        if nu_hz is None:
            nu_hz = np.arange(1, n + 1) / duration
        nu_hz = np.asarray(nu_hz, dtype=float)
        if nu_hz.shape != (n,):
            raise ValueError("need one frequency per harmonic")
        amps = coeffs[0::2] + 1j * coeffs[1::2]
        new = tuple(Harmonic(k + 1, nu_hz[k], amps[k]) for k in range(n))
        if baseline is not None:
            if baseline.duration != duration:
                raise DomainError("baseline duration differs from requested duration")
            return replace(baseline, harmonics=baseline.harmonics + new)
        return cls(duration, carrier_hz, tuple(clamp_hz), new)

    @property
    def carrier(self):
        """Carrier w0 in rad/s."""
        return TWO_PI * self.carrier_hz

    @property
    def clamp(self):
        """Clamp window in rad/s."""
        return TWO_PI * self.clamp_hz[0], TWO_PI * self.clamp_hz[1]

    def modulation(self, t):
        """Dimensionless modulation (the sum without the leading 1); no domain check."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        if not self.harmonics:
            return np.zeros(t.shape)
        return _kernels.modulation(np.ascontiguousarray(t), *self._arrays)

    def raw(self, t):
        """Unclamped f(t) in rad/s."""
        return self.carrier * (1.0 + self.modulation(t))

    def sample(self, t):
        """Clamped f(t) in rad/s on an array of times, without the domain check."""
        lo, hi = self.clamp
        return np.clip(self.raw(t), lo, hi)

    def evaluate(self, t):
        """Clamped drive frequency f(t) in rad/s.

        Accepts a scalar or an array; raises DomainError outside [0, T].
        """
        arr = np.asarray(t, dtype=float)
        if np.any(~np.isfinite(arr)) or np.any(arr < 0.0) or np.any(arr > self.duration):
            raise DomainError(f"t outside pulse support [0, {self.duration!r}] s")
        out = self.sample(arr.ravel())
        return float(out[0]) if arr.ndim == 0 else out.reshape(arr.shape)

    def clamp_crossings(self, nodes):
        """Times in (nodes[0], nodes[-1]) where the unclamped f meets a clamp edge.

        ``nodes`` is an increasing grid fine enough that each interval
        holds at most one crossing per edge; roots are refined by bisection
        to below 1e-18 s.
        """
        nodes = np.asarray(nodes, dtype=float)
        if not self.harmonics:
            return np.empty(0)
        vals = self.raw(nodes)
        found = []
        for edge in self.clamp:
            g = vals - edge
            idx = np.nonzero(np.sign(g[:-1]) * np.sign(g[1:]) < 0)[0]
            if idx.size == 0:
                continue
            a = nodes[idx].copy()
            b = nodes[idx + 1].copy()
            ga = g[idx]
            for _ in range(64):
                mid = 0.5 * (a + b)
                gm = self.raw(mid) - edge
                left = np.sign(gm) == np.sign(ga)
                a = np.where(left, mid, a)
                ga = np.where(left, gm, ga)
                b = np.where(left, b, mid)
                if np.all(b - a < 1e-18):
                    break
            found.append(0.5 * (a + b))
        if not found:
            return np.empty(0)
        return np.unique(np.concatenate(found))

    def truncate(self, new_duration):
        return truncate(self, new_duration)

    def coefficient_count(self):
        return 2 * len(self.harmonics)

    # --- persistence -----------------------------------------------------

    def to_dict(self, exact=False):
        """Plain-data form (kHz, microseconds).

        With ``exact`` the unit-converted numbers are Decimals holding the
        shifted shortest repr, which is what ``to_json`` writes out.
        """
        conv = _shift_decimal if exact else _shift
        out = {
            "duration_us": conv(self.duration, 6),
            "carrier_khz": conv(self.carrier_hz, -3),
            "clamp_khz": [conv(v, -3) for v in self.clamp_hz],
            "harmonics": [],
        }
        for h in self.harmonics:
            entry = {"k": h.k, "re": h.amplitude.real, "im": h.amplitude.imag,
                     "nu_khz": conv(h.nu_hz, -3)}
            if h.t_offset != 0.0 or h.t_sign != 1.0:
                entry["t_offset_us"] = conv(h.t_offset, 6)
                entry["t_sign"] = int(h.t_sign)
            out["harmonics"].append(entry)
        return out

    @classmethod
    def from_dict(cls, data):
        duration = _shift(data["duration_us"], -6)
        hs = []
        for e in data.get("harmonics", []):
            k = int(e["k"])
            nu = _shift(e["nu_khz"], 3) if "nu_khz" in e else k / duration
            hs.append(Harmonic(k, nu, complex(float(e["re"]), float(e["im"])),
                               _shift(e.get("t_offset_us", 0.0), -6),
                               float(e.get("t_sign", 1))))
        return cls(duration, _shift(data.get("carrier_khz", PAPER_CARRIER_HZ / 1e3), 3),
                   tuple(_shift(v, 3) for v in data.get("clamp_khz", [f / 1e3 for f in PAPER_CLAMP_HZ])),
                   tuple(hs))

    def to_json(self):
        """JSON text; ``from_json`` recovers an identical pulse."""
        return _dumps(self.to_dict(exact=True))

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text, parse_float=Decimal))


def _shift_decimal(x, exponent):
    return Decimal(repr(float(x))).scaleb(exponent)


def _shift(x, exponent):
    # decimal shift; a Decimal input (parsed JSON) is used digit for digit
    d = x if isinstance(x, Decimal) else Decimal(repr(float(x)))
    return float(d.scaleb(exponent))


def _dumps(obj, indent=2, level=0):
    """json.dumps that writes Decimals as exact JSON numbers."""
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_dumps(v, indent, level + 1)}"
                 for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        items = [pad + _dumps(v, indent, level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    if isinstance(obj, Decimal):
        text = format(obj, "f") if -30 < obj.adjusted() < 30 else str(obj)
        return text if any(c in text for c in ".eE") else text + ".0"
    return json.dumps(obj)


def constant_pulse(duration, carrier_hz=PAPER_CARRIER_HZ, clamp_hz=PAPER_CLAMP_HZ):
    """Bare carrier, f(t) = w0."""
    return Pulse(duration, carrier_hz, tuple(clamp_hz), ())


def evaluate(pulse, t):
    return pulse.evaluate(t)


def truncate(pulse, new_duration):
    """Interrupt ``pulse`` at ``new_duration`` without refitting its harmonics."""
    if not 0.0 < new_duration <= pulse.duration:
        raise DomainError(
            f"truncation time {new_duration!r} s outside (0, {pulse.duration!r}] s")
    if new_duration == pulse.duration:
        return pulse
    return replace(pulse, duration=float(new_duration))


def naive_time_reverse(pulse, sign_flip=False):
    """Replay the waveform backwards: g(t) = f(T - t).

    With ``sign_flip`` the modulation is also multiplied by -1 (a pi phase
    on every amplitude), leaving the carrier in place.
    """
    T = pulse.duration
    scale = -1.0 if sign_flip else 1.0
    hs = tuple(Harmonic(h.k, h.nu_hz, scale * h.amplitude,
                        h.t_offset + h.t_sign * T, -h.t_sign) for h in pulse.harmonics)
    return replace(pulse, harmonics=hs)
