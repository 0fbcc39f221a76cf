"""Background noise and artifact generators.

Stationary AR(1) colored noise, optional slow multiplicative gain
modulation, RMS-based SNR mixing, plus the two event-driven artifact
tracks: fetal-movement bursts and uterine-contraction episodes.

The artifact generative shapes (noise bursts under a raised-cosine window,
trapezoidal contraction episodes) are the simplest forms consistent with
the configurable rates/durations/bands; band-limiting uses an exact DFT
mask so artifact energy stays inside the configured band at any sample
rate.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.signal import lfilter

from .errors import ParameterError
from .kernel import Signal


@dataclass(frozen=True)
class NoiseConfig:
    rho: float = 0.95
    gamma: float = 0.3
    lp_cutoff: float = 0.5
    snr_db: float = 10.0

    def __post_init__(self):
        if not abs(self.rho) < 1:
            raise ParameterError(f"AR(1) coefficient must satisfy |rho| < 1, got {self.rho!r}")
        if self.gamma < 0:
            raise ParameterError("gain-modulation depth gamma must be >= 0")
        if self.lp_cutoff <= 0:
            raise ParameterError("lp_cutoff must be > 0")


@dataclass(frozen=True)
class MovementConfig:
    enabled: bool = True
    intensity: float = 1.3
    rate_per_min: float = 8.0
    duration_range: tuple[float, float] = (0.12, 0.45)
    band: tuple[float, float] = (15.0, 200.0)
    thump_prob: float = 0.35

    def __post_init__(self):
        if self.rate_per_min < 0 or self.intensity < 0:
            raise ParameterError("movement rate and intensity must be >= 0")
        if not 0 < self.duration_range[0] <= self.duration_range[1]:
            raise ParameterError("movement duration_range must be ascending and positive")
        if not 0 < self.band[0] < self.band[1]:
            raise ParameterError("movement band must be ascending and positive")
        if not 0 <= self.thump_prob <= 1:
            raise ParameterError("thump_prob must be in [0, 1]")


@dataclass(frozen=True)
class UterineConfig:
    enabled: bool = True
    rate_per_10min: float = 4.0
    duration_range: tuple[float, float] = (10.0, 25.0)
    rise_fall_frac: tuple[float, float] = (0.35, 0.35)
    attenuation: float = 0.45
    noise_band: tuple[float, float] = (0.5, 18.0)
    noise_intensity: float = 0.8

    def __post_init__(self):
        if self.rate_per_10min < 0 or self.noise_intensity < 0:
            raise ParameterError("uterine rate and noise intensity must be >= 0")
        if not 0 < self.duration_range[0] <= self.duration_range[1]:
            raise ParameterError("uc duration_range must be ascending and positive")
        if not 0 <= self.attenuation < 1:
            raise ParameterError("uc attenuation must be in [0, 1)")
        if self.rise_fall_frac[0] < 0 or self.rise_fall_frac[1] < 0 or sum(self.rise_fall_frac) > 1:
            raise ParameterError("rise/fall fractions must be >= 0 and sum to <= 1")
        if not 0 < self.noise_band[0] < self.noise_band[1]:
            raise ParameterError("uc noise band must be ascending and positive")


class ArtifactEvent(NamedTuple):
    start: float
    duration: float
    thump: bool = False


def ar1_noise(rho: float, n: int, seed, fs: float = 1.0) -> Signal:
    """Stationary unit-variance AR(1): n_t = rho*n_{t-1} + sqrt(1-rho^2)*eps_t.

    Initialized at stationarity (first sample ~ N(0,1)); deterministic for a
    given seed.
    """
    if not abs(rho) < 1:
        raise ParameterError(f"AR(1) is unstable for |rho| >= 1, got rho={rho!r}")
    if n < 1:
        raise ParameterError("need n >= 1 samples")
    rng = np.random.default_rng(seed)
    drive = np.empty(n)
    drive[0] = rng.standard_normal()
    drive[1:] = np.sqrt(1.0 - rho * rho) * rng.standard_normal(n - 1)
    out = lfilter([1.0], [1.0, -rho], drive)
    return Signal(out, fs)


def _lowpass_unit_noise(n: int, cutoff: float, fs: float, rng: np.random.Generator) -> np.ndarray:
    """Mean-removed, unit-variance low-passed white noise (DFT brick wall)."""
    w = rng.standard_normal(n)
    spec = np.fft.rfft(w)
    freqs = np.fft.rfftfreq(n, 1.0 / fs)
    spec[freqs > cutoff] = 0.0
    spec[0] = 0.0
    lp = np.fft.irfft(spec, n)
    sd = lp.std()
    return lp / sd if sd > 0 else lp


def gain_modulate(noise: Signal, gamma: float, lp_cutoff: float, seed) -> Signal:
    """Multiply by g = 1 + gamma * LP{white noise}.

    The low-passed noise is variance-normalized (and mean-removed) before
    scaling, so gamma is directly the modulation depth.
    """
    if gamma < 0:
        raise ParameterError("gamma must be >= 0")
    if gamma == 0:
        return Signal(noise.samples, noise.fs)
    rng = np.random.default_rng(seed)
    g = 1.0 + gamma * _lowpass_unit_noise(len(noise), lp_cutoff, noise.fs, rng)
    return Signal(g * noise.samples, noise.fs)


def rms(x: np.ndarray) -> float:
    return float(np.sqrt(np.mean(np.square(x)))) if len(x) else 0.0


def noise_scale_for_snr(cardiac_rms: float, snr_db: float) -> float:
    """sigma_n such that RMS(cardiac)/RMS(sigma_n * unit-RMS noise) hits the target."""
    if cardiac_rms <= 0:
        raise ParameterError("SNR is undefined for a silent cardiac component")
    return cardiac_rms / 10.0 ** (snr_db / 20.0)


def mix_with_snr(x_c: Signal, noise: Signal, snr_db: float) -> Signal:
    """x_c + sigma_n * noise with sigma_n from the RMS rule.

    Exact target SNR requires the caller to pass unit-RMS noise.
    """
    if len(x_c) != len(noise) or x_c.fs != noise.fs:
        raise ParameterError("cardiac and noise signals must share length and fs")
    sigma = noise_scale_for_snr(rms(x_c.samples), snr_db)
    return Signal(x_c.samples + sigma * noise.samples, x_c.fs)


def _clamped_band(band: tuple[float, float], fs: float) -> tuple[float, float]:
    hi = min(band[1], 0.45 * fs)
    if hi <= band[0]:
        raise ParameterError(f"band {band} infeasible at fs={fs} Hz")
    return band[0], hi


def _bandlimited_unit_noise(n: int, band: tuple[float, float], fs: float,
                            rng: np.random.Generator) -> np.ndarray:
    w = rng.standard_normal(n)
    spec = np.fft.rfft(w)
    freqs = np.fft.rfftfreq(n, 1.0 / fs)
    lo, hi = _clamped_band(band, fs)
    spec[(freqs < lo) | (freqs > hi)] = 0.0
    x = np.fft.irfft(spec, n)
    r = rms(x)
    return x / r if r > 0 else x


def movement_events(cfg: MovementConfig, duration: float, seed) -> list[ArtifactEvent]:
    """Poisson-count fetal-movement events; layout only, no rendering."""
    if not cfg.enabled or duration <= 0:
        return []
    rng = np.random.default_rng(seed)
    count = rng.poisson(cfg.rate_per_min * duration / 60.0)
    events = []
    for _ in range(count):
        start = rng.uniform(0.0, duration)
        dur = rng.uniform(*cfg.duration_range)
        thump = bool(rng.uniform() < cfg.thump_prob)
        events.append(ArtifactEvent(start, dur, thump))
    return sorted(events)


def movement_artifacts(cfg: MovementConfig, duration: float, fs: float, seed) -> Signal:
    """Band-passed noise bursts under raised-cosine windows, optional thumps.

    Burst noise is normalized to unit RMS before the window, so
    ``cfg.intensity`` scales amplitudes against a unit-RMS reference. Thumps
    are low-frequency (< 25 Hz) damped transients superimposed on a burst.
    Output is exactly zero outside event supports.
    """
    n = int(round(duration * fs))
    out = np.zeros(n)
    if not cfg.enabled:
        return Signal(out, fs)
    events = movement_events(cfg, duration, seed)
    rng = np.random.default_rng(np.random.SeedSequence([_seed_int(seed), 1]))
    for ev in events:
        i0 = int(round(ev.start * fs))
        m = max(int(round(ev.duration * fs)), 8)
        if i0 >= n:
            continue
        burst = cfg.intensity * np.hanning(m) * _bandlimited_unit_noise(m, cfg.band, fs, rng)
        if ev.thump:
            f_thump = rng.uniform(8.0, 22.0)
            t = np.arange(m) / fs
            burst += cfg.intensity * np.sin(2 * np.pi * f_thump * t) * np.exp(-t / (ev.duration / 3.0))
        keep = min(m, n - i0)
        out[i0:i0 + keep] += burst[:keep]
    return Signal(out, fs)


def uterine_events(cfg: UterineConfig, duration: float, seed) -> list[ArtifactEvent]:
    if not cfg.enabled or duration <= 0:
        return []
    rng = np.random.default_rng(seed)
    count = rng.poisson(cfg.rate_per_10min * duration / 600.0)
    events = []
    for _ in range(count):
        start = rng.uniform(0.0, duration)
        dur = rng.uniform(*cfg.duration_range)
        events.append(ArtifactEvent(start, dur))
    return sorted(events)


def _trapezoid(m: int, rise_frac: float, fall_frac: float) -> np.ndarray:
    """Unit-plateau trapezoid over m samples: linear rise, plateau, linear fall."""
    x = np.linspace(0.0, 1.0, m)
    up = np.ones(m)
    if rise_frac > 0:
        up = np.minimum(up, x / rise_frac)
    if fall_frac > 0:
        up = np.minimum(up, (1.0 - x) / fall_frac)
    return np.clip(up, 0.0, 1.0)


def uterine_contraction_track(cfg: UterineConfig, duration: float, fs: float,
                              seed) -> tuple[Signal, Signal]:
    """(attenuation envelope, contraction noise) over the whole recording.

    Each contraction is a trapezoid; the attenuation envelope has plateau
    height ``cfg.attenuation`` (overlaps combine by max, attenuation never
    stacks beyond one plateau) and is meant to multiply the cardiac
    component as (1 - envelope). The noise track is band-limited unit-RMS
    noise gated by the same trapezoids and scaled by ``noise_intensity``.
    """
    n = int(round(duration * fs))
    gate = np.zeros(n)
    if not cfg.enabled:
        return Signal(gate, fs), Signal(gate.copy(), fs)
    events = uterine_events(cfg, duration, seed)
    for ev in events:
        i0 = int(round(ev.start * fs))
        m = max(int(round(ev.duration * fs)), 4)
        if i0 >= n:
            continue
        trap = _trapezoid(m, cfg.rise_fall_frac[0], cfg.rise_fall_frac[1])
        keep = min(m, n - i0)
        gate[i0:i0 + keep] = np.maximum(gate[i0:i0 + keep], trap[:keep])
    env = cfg.attenuation * gate
    rng = np.random.default_rng(np.random.SeedSequence([_seed_int(seed), 1]))
    if gate.any():
        uc_noise = cfg.noise_intensity * gate * _bandlimited_unit_noise(n, cfg.noise_band, fs, rng)
    else:
        uc_noise = np.zeros(n)
    return Signal(env, fs), Signal(uc_noise, fs)


def _seed_int(seed) -> int:
    """Collapse an int or SeedSequence-like seed to a stable int."""
    if isinstance(seed, np.random.SeedSequence):
        return int(seed.generate_state(1, dtype=np.uint64)[0])
    return int(seed)


__all__ = [
    "NoiseConfig", "MovementConfig", "UterineConfig", "ArtifactEvent",
    "ar1_noise", "gain_modulate", "mix_with_snr", "noise_scale_for_snr", "rms",
    "movement_events", "movement_artifacts", "uterine_events",
    "uterine_contraction_track",
]
