"""Abdominal transmission: cascaded exponential impulse response + convolution.

The effective abdomen-to-sensor filter is the convolution of two causal
decaying exponentials, normalized to unit DC gain (its discrete-time
integral sum(h)/fs equals 1). Optional per-kernel onset delays r/c model
the acoustic path lengths; they are quantized to whole samples.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import fftconvolve

from .errors import ConfigError, ParameterError
from .kernel import Signal

# Direct convolution below this size, FFT above: same result, better speed.
FFT_THRESHOLD = 4096


@dataclass(frozen=True)
class TransmissionConfig:
    a1: float = 1.0
    beta1: float = 100.0
    r1: float = 0.01
    c1: float = 1500.0
    a2: float = 0.8
    beta2: float = 300.0
    r2: float = 0.03
    c2: float = 1540.0
    use_delays: bool = True

    def __post_init__(self):
        if self.beta1 <= 0 or self.beta2 <= 0:
            raise ParameterError("decay rates beta1, beta2 must be > 0")
        if self.a1 <= 0 or self.a2 <= 0:
            raise ParameterError("gains a1, a2 must be > 0")
        if self.r1 < 0 or self.r2 < 0:
            raise ParameterError("path lengths r1, r2 must be >= 0")
        if self.c1 <= 0 or self.c2 <= 0:
            raise ParameterError("propagation speeds c1, c2 must be > 0")

    @property
    def delay1(self) -> float:
        return self.r1 / self.c1 if self.use_delays else 0.0

    @property
    def delay2(self) -> float:
        return self.r2 / self.c2 if self.use_delays else 0.0


def exp_kernel(amplitude: float, beta: float, delay: float, fs: float, horizon: float) -> Signal:
    """One decaying exponential A*exp(-beta*(t-delay)) for t >= delay, else 0.

    ``horizon`` is the post-onset duration kept; it must cover at least
    8 decay constants or the truncation error is flagged.
    """
    if beta <= 0:
        raise ParameterError(f"beta must be > 0, got {beta!r}")
    if horizon < 8.0 / beta:
        raise ParameterError(
            f"horizon {horizon} s truncates the kernel (need >= {8.0 / beta:.4g} s for beta={beta})"
        )
    n_delay = int(round(delay * fs))
    n_tail = int(round(horizon * fs)) + 1
    h = np.zeros(n_delay + n_tail)
    t = np.arange(n_tail) / fs
    h[n_delay:] = amplitude * np.exp(-beta * t)
    return Signal(h, fs)


def cascade_response(cfg: TransmissionConfig, fs: float) -> Signal:
    """Discretized two-exponential cascade, normalized to unit DC gain.

    The raw sample-domain convolution of the two sampled kernels represents
    the continuous convolution at t = (n+1)/fs (the continuous cascade is 0
    at t = 0); a leading zero is prepended so the discrete peak lands within
    half a sample of the closed-form peak location.
    """
    h1 = exp_kernel(cfg.a1, cfg.beta1, cfg.delay1, fs, 8.0 / cfg.beta1)
    h2 = exp_kernel(cfg.a2, cfg.beta2, cfg.delay2, fs, 8.0 / cfg.beta2)
    raw = np.convolve(h1.samples, h2.samples)
    h = np.concatenate([[0.0], raw])
    integral = h.sum() / fs
    if not np.isfinite(integral) or integral <= 0:
        raise ConfigError("degenerate transmission cascade: zero or non-finite energy")
    return Signal(h / integral, fs)


def cascade_peak_time(cfg: TransmissionConfig) -> float:
    """Closed-form peak location of the continuous cascade (oracle helper)."""
    d = cfg.delay1 + cfg.delay2
    if cfg.beta1 == cfg.beta2:
        return d + 1.0 / cfg.beta1
    return d + np.log(cfg.beta2 / cfg.beta1) / (cfg.beta2 - cfg.beta1)


def propagate(x: Signal, h: Signal, method: str = "auto") -> Signal:
    """Causal convolution of a source with the impulse response.

    Output is truncated to len(x) and scaled by 1/fs so that the discrete
    sum approximates the continuous convolution integral; with the
    unit-DC-gain ``h`` from :func:`cascade_response`, a constant input is
    mapped to itself after the transient.
    """
    if x.fs != h.fs:
        raise ParameterError(f"sample-rate mismatch: x.fs={x.fs}, h.fs={h.fs}")
    if method not in ("auto", "direct", "fft"):
        raise ParameterError(f"unknown convolution method {method!r}")
    if method == "auto":
        method = "fft" if max(len(x), len(h)) > FFT_THRESHOLD else "direct"
    if method == "fft":
        full = fftconvolve(x.samples, h.samples)
    else:
        full = np.convolve(x.samples, h.samples)
    return Signal(full[: len(x)] / x.fs, x.fs)
