"""Asymmetric damped-sinusoid heart-sound event kernel.

A single S1/S2 event is a sine carrier shaped by a piecewise envelope:
linear attack over ``attack`` seconds, then exponential decay with time
constant ``decay``. The envelope is continuous (value 1) at the attack/decay
junction and identically zero for negative times.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import AliasingError, ParameterError

# Global attack-time default: short enough to keep the rapid S1/S2 onset,
# fixed across cycles to decouple it from the decay parameter.
DEFAULT_ATTACK = 0.008

# Events are truncated once the envelope has decayed by e^-8 (< 0.04% of the
# event energy lives beyond this horizon).
DECAY_HORIZON = 8.0


@dataclass(frozen=True)
class EventParams:
    """Parameters of one sound event: gain, carrier, envelope shape."""

    amplitude: float
    f0: float
    attack: float = DEFAULT_ATTACK
    decay: float = 0.02

    def __post_init__(self):
        for name in ("amplitude", "f0", "attack", "decay"):
            v = getattr(self, name)
            if not np.isfinite(v) or v <= 0:
                raise ParameterError(f"EventParams.{name} must be finite and > 0, got {v!r}")


@dataclass
class Signal:
    """Uniformly sampled waveform; the common currency between modules."""

    samples: np.ndarray
    fs: float

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if self.samples.ndim != 1:
            raise ParameterError(f"Signal.samples must be 1-D, got shape {self.samples.shape}")
        if not np.isfinite(self.fs) or self.fs <= 0:
            raise ParameterError(f"Signal.fs must be finite and > 0, got {self.fs!r}")
        if self.samples.size and not np.all(np.isfinite(self.samples)):
            raise ParameterError("Signal contains non-finite samples")

    def __len__(self) -> int:
        return int(self.samples.size)

    @property
    def duration(self) -> float:
        return self.samples.size / self.fs

    def times(self) -> np.ndarray:
        return np.arange(self.samples.size) / self.fs


def envelope(t, attack: float, decay: float):
    """Event envelope: t/attack on [0, attack), exp decay after, 0 before 0.

    Accepts scalars or arrays; continuous with value 1 at ``t == attack``.
    """
    if attack <= 0 or decay <= 0:
        raise ParameterError(f"attack and decay must be > 0, got {attack!r}, {decay!r}")
    t = np.asarray(t, dtype=np.float64)
    out = np.zeros_like(t)
    rising = (t >= 0) & (t < attack)
    decaying = t >= attack
    out[rising] = t[rising] / attack
    out[decaying] = np.exp(-(t[decaying] - attack) / decay)
    return out if out.ndim else float(out)


def kernel(t, p: EventParams):
    """Damped-sinusoid event value(s) at time(s) ``t`` (seconds)."""
    t = np.asarray(t, dtype=np.float64)
    out = p.amplitude * np.sin(2.0 * np.pi * p.f0 * t) * envelope(t, p.attack, p.decay)
    return out if out.ndim else float(out)


def event_duration(p: EventParams, horizon: float = DECAY_HORIZON) -> float:
    return p.attack + horizon * p.decay


def render_event(p: EventParams, fs: float, horizon: float = DECAY_HORIZON) -> Signal:
    """Discretize one event at t = n/fs, truncated at attack + horizon*decay.

    Requires fs >= 4*f0 (Nyquist with margin); the last retained sample has
    an envelope value <= exp(-horizon).
    """
    if fs <= 0:
        raise ParameterError(f"fs must be > 0, got {fs!r}")
    if fs < 4.0 * p.f0:
        raise AliasingError(
            f"fs={fs} Hz is too low for carrier f0={p.f0} Hz (need fs >= {4.0 * p.f0} Hz)"
        )
    n = int(round(event_duration(p, horizon) * fs))
    t = np.arange(n) / fs
    return Signal(kernel(t, p), fs)
