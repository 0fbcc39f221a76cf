"""Cardiac source processes: RR sequences and S1/S2 event trains.

A fetal cycle is two kernel events (S1 at the cycle start, S2 after the
systolic interval), rendered on a nominal grid (the mean RR of the series)
and time-stretched by polyphase resampling to the exact per-cycle length
round(rr_k * fs) before concatenation. The maternal train reuses the same
cycle renderer with fixed per-beat parameters and a constant rate, so the
two sources share one kernel code path.

Stretching a whole cycle scales its internal systolic interval by
rr_k / mean(rr); the annotated ground truth reports both the nominal and
the realized value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.signal import resample_poly

from .errors import ConfigError, CycleGeometryError, ParameterError
from .kernel import DEFAULT_ATTACK, EventParams, Signal, render_event

THETA_FIELDS = ("a_s1", "a_s2", "tau_s1", "tau_s2", "delta_t")
THETA_DIM = len(THETA_FIELDS)

#: plausibility band for fetal RR intervals (seconds)
FETAL_RR_BAND = (0.25, 0.90)


@dataclass(frozen=True)
class CycleTheta:
    """Per-cycle fetal parameter vector: S1/S2 gains, decays, systolic interval."""

    a_s1: float
    a_s2: float
    tau_s1: float
    tau_s2: float
    delta_t: float

    def __post_init__(self):
        if self.a_s1 < 0 or self.a_s2 < 0:
            raise ParameterError("amplitudes must be >= 0")
        if self.tau_s1 <= 0 or self.tau_s2 <= 0 or self.delta_t <= 0:
            raise ParameterError("decay constants and systolic interval must be > 0")

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, f) for f in THETA_FIELDS])

    @classmethod
    def from_array(cls, arr) -> "CycleTheta":
        arr = np.asarray(arr, dtype=float)
        if arr.shape != (THETA_DIM,):
            raise ParameterError(f"theta vector must have shape ({THETA_DIM},), got {arr.shape}")
        return cls(*arr.tolist())


@dataclass(frozen=True)
class RRSeries:
    values: np.ndarray
    mode: str

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))
        if self.values.ndim != 1 or self.values.size == 0:
            raise ParameterError("RR series must be a nonempty 1-D sequence")
        if np.any(self.values <= 0):
            raise ParameterError("RR intervals must be > 0")

    def __len__(self) -> int:
        return int(self.values.size)


@dataclass(frozen=True)
class HRVConfig:
    mean_rr: float
    alpha: float = 0.03
    jitter_std: float = 0.008
    drift_window: int = 10
    rr_band: tuple[float, float] = FETAL_RR_BAND

    def __post_init__(self):
        if self.alpha < 0 or self.jitter_std < 0:
            raise ParameterError("alpha and jitter_std must be >= 0")
        if self.drift_window < 1:
            raise ParameterError("drift smoothing window must be >= 1 cycle")


@dataclass(frozen=True)
class MaternalConfig:
    """Fixed maternal nuisance parameters; only global_scale is meant to vary."""

    mhr: float = 80.0
    a_s1: float = 1.0
    a_s2: float = 0.7
    f0_s1: float = 20.0
    f0_s2: float = 35.0
    tau: float = 0.04
    delta_t: float = 0.30
    global_scale: float = 0.25

    def __post_init__(self):
        if not 30.0 < self.mhr < 200.0:
            raise ParameterError(f"maternal heart rate must be in (30, 200) bpm, got {self.mhr!r}")
        if self.global_scale < 0:
            raise ParameterError("global_scale must be >= 0")


def make_rr_series(mode: str, cfg: HRVConfig, n_cycles: int, seed=None,
                   values=None) -> RRSeries:
    """Build an RR series: constant, explicit values, or weak-HRV process.

    weak_hrv: RR_k = mean + alpha*d_k + eta_k with d_k a moving-average
    smoothed standard-normal sequence renormalized to unit variance and
    eta_k ~ N(0, jitter_std^2); values are clipped into the plausibility
    band rather than resampled.
    """
    lo, hi = cfg.rr_band
    if mode == "explicit":
        if values is None:
            raise ConfigError("explicit RR mode requires a value sequence")
        arr = np.asarray(values, dtype=float)
        if n_cycles is not None and arr.size != n_cycles:
            raise ConfigError(f"explicit RR series has {arr.size} values, expected {n_cycles}")
        if np.any((arr < lo) | (arr > hi)):
            raise ConfigError(f"explicit RR values outside plausibility band ({lo}, {hi}) s")
        return RRSeries(arr, "explicit")
    if n_cycles < 1:
        raise ParameterError("need at least one cycle")
    if not lo <= cfg.mean_rr <= hi:
        raise ConfigError(f"mean RR {cfg.mean_rr:.4f} s outside plausibility band ({lo}, {hi}) s")
    if mode == "constant":
        return RRSeries(np.full(n_cycles, cfg.mean_rr), "constant")
    if mode == "weak_hrv":
        rng = np.random.default_rng(seed)
        z = rng.standard_normal(n_cycles)
        w = min(cfg.drift_window, n_cycles)
        drift = np.convolve(z, np.ones(w) / w, mode="same")
        sd = drift.std()
        if sd > 0:
            drift = drift / sd
        jitter = cfg.jitter_std * rng.standard_normal(n_cycles)
        rr = np.clip(cfg.mean_rr + cfg.alpha * drift + jitter, lo, hi)
        return RRSeries(rr, "weak_hrv")
    raise ConfigError(f"unknown RR mode {mode!r}")


def onset_times(rr: RRSeries) -> np.ndarray:
    """Cycle onset times: t_1 = 0, t_{k+1} = t_k + rr_k."""
    return np.concatenate([[0.0], np.cumsum(rr.values[:-1])])


def apply_shared_tau(theta: CycleTheta) -> CycleTheta:
    """Replace both decay constants by their mean; amplitudes and delta_t unchanged."""
    common = 0.5 * (theta.tau_s1 + theta.tau_s2)
    return replace(theta, tau_s1=common, tau_s2=common)


def render_cycle(theta: CycleTheta, f0_s1: float, f0_s2: float, fs: float,
                 attack: float = DEFAULT_ATTACK, shared_tau: bool = False,
                 n_samples: int | None = None) -> np.ndarray:
    """One cycle on a uniform grid: S1 at sample 0, S2 at round(delta_t*fs).

    With ``n_samples=None`` the buffer is the natural event extent (tails
    included); otherwise it is truncated/padded to exactly ``n_samples``.
    Zero-amplitude events are skipped. This is also the noiseless model used
    for per-cycle fitting.
    """
    th = apply_shared_tau(theta) if shared_tau else theta
    placed: list[tuple[int, np.ndarray]] = []
    if th.a_s1 > 0:
        placed.append((0, render_event(EventParams(th.a_s1, f0_s1, attack, th.tau_s1), fs).samples))
    if th.a_s2 > 0:
        start = int(round(th.delta_t * fs))
        placed.append((start, render_event(EventParams(th.a_s2, f0_s2, attack, th.tau_s2), fs).samples))
    natural = max((start + ev.size for start, ev in placed), default=0)
    n = natural if n_samples is None else int(n_samples)
    out = np.zeros(n)
    for start, ev in placed:
        if start >= n:
            continue
        keep = min(ev.size, n - start)
        out[start:start + keep] += ev[:keep]
    return out


def render_fetal_train(thetas, rr: RRSeries, f0_s1: float, f0_s2: float, fs: float,
                       shared_tau: bool = False, attack: float = DEFAULT_ATTACK) -> Signal:
    """Concatenate per-cycle renders, each stretched to round(rr_k*fs) samples.

    Total length is exactly sum_k round(rr_k*fs). Event tails that outlast a
    cycle are overlap-added into the following cycles (the final tail is
    truncated at the end of the train).
    """
    thetas = list(thetas)
    if len(thetas) != len(rr):
        raise ParameterError(f"{len(thetas)} theta vectors for {len(rr)} RR intervals")
    nominal = float(np.mean(rr.values))
    nominal_len = int(round(nominal * fs))
    target_lens = [int(round(r * fs)) for r in rr.values]
    total = int(np.sum(target_lens))
    out = np.zeros(total)
    offset = 0
    for k, (theta, r, tlen) in enumerate(zip(thetas, rr.values, target_lens)):
        if theta.delta_t >= r:
            raise CycleGeometryError(
                f"cycle {k}: systolic interval {theta.delta_t:.4f} s >= RR {r:.4f} s"
            )
        buf = render_cycle(theta, f0_s1, f0_s2, fs, attack=attack, shared_tau=shared_tau)
        if tlen != nominal_len and buf.size:
            buf = resample_poly(buf, tlen, nominal_len)
        end = min(offset + buf.size, total)
        if end > offset:
            out[offset:end] += buf[: end - offset]
        offset += tlen
    return Signal(out, fs)


def maternal_onsets(cfg: MaternalConfig, duration: float) -> np.ndarray:
    rr = 60.0 / cfg.mhr
    count = max(int(math.ceil(duration / rr)), 0)
    t = rr * np.arange(count)
    return t[t < duration]


def render_maternal_train(cfg: MaternalConfig, duration: float, fs: float,
                          attack: float = DEFAULT_ATTACK) -> Signal:
    """Maternal two-event train at constant rate, scaled by global_scale.

    Deterministic: the same beat parameters repeat at onsets l*(60/mhr).
    """
    if duration <= 0:
        raise ParameterError("duration must be > 0")
    n_out = int(round(duration * fs))
    if cfg.global_scale == 0.0 or n_out == 0:
        return Signal(np.zeros(n_out), fs)
    rr = 60.0 / cfg.mhr
    n_cycles = int(math.ceil(duration / rr)) + 1
    theta = CycleTheta(cfg.a_s1, cfg.a_s2, cfg.tau, cfg.tau, cfg.delta_t)
    series = RRSeries(np.full(n_cycles, rr), "constant")
    train = render_fetal_train([theta] * n_cycles, series, cfg.f0_s1, cfg.f0_s2, fs,
                               shared_tau=False, attack=attack)
    out = np.zeros(n_out)
    m = min(n_out, len(train))
    out[:m] = train.samples[:m]
    return Signal(cfg.global_scale * out, fs)
