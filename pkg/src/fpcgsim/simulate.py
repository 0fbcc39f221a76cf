"""End-to-end synthesis: config in, fully annotated Recording out.

Pipeline: per-cycle parameter sampling -> RR series -> fetal + maternal
event trains -> shared transmission filter -> uterine-contraction
attenuation -> additive noise (SNR-scaled AR(1) with gain modulation) and
artifact tracks. Every stochastic stage draws from its own seed derived
from the master seed, so the full pipeline is bit-reproducible and toggling
one component never shifts another's stream.

Artifact tracks are generated against a unit-RMS reference and scaled by
the same sigma_n as the background noise: they are disturbances riding on
the noise floor, and they vanish when noise is disabled (snr_db = inf).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import SimConfig, validate_hard
from .errors import FpcgError, PipelineError
from .heart import (CycleTheta, make_rr_series, onset_times, render_fetal_train,
                    render_maternal_train)
from .kernel import Signal
from .noise import (ar1_noise, gain_modulate, movement_artifacts, movement_events,
                    noise_scale_for_snr, rms, uterine_contraction_track, uterine_events)
from .sampling import bootstrap_delta_t, sample_thetas
from .seeding import component_seed
from .transmission import cascade_response, propagate

COMPONENT_NAMES = ("fetal_clean", "maternal_clean", "cardiac_propagated",
                   "uc_attenuation", "noise", "movement", "uc_noise")


@dataclass
class Recording:
    """Synthesized mixture plus its component breakdown and ground truth."""

    mixture: Signal
    components: dict[str, np.ndarray]
    annotations: dict
    config: dict
    seed: int

    @property
    def fs(self) -> float:
        return self.mixture.fs

    def reconstruct_mixture(self) -> np.ndarray:
        c = self.components
        return (c["cardiac_propagated"] * (1.0 - c["uc_attenuation"])
                + c["noise"] + c["movement"] + c["uc_noise"])

    def component_sum_error(self) -> float:
        return float(np.max(np.abs(self.mixture.samples - self.reconstruct_mixture()),
                            initial=0.0))

    def equals(self, other: "Recording") -> bool:
        if self.seed != other.seed or self.fs != other.fs or self.config != other.config:
            return False
        if not np.array_equal(self.mixture.samples, other.mixture.samples):
            return False
        for name in COMPONENT_NAMES:
            if not np.array_equal(self.components[name], other.components[name]):
                return False
        return self.annotations == other.annotations


def _stage(name: str):
    class _StageContext:
        def __enter__(self):
            return self

        def __exit__(self, exc_type, exc, tb):
            if exc is not None and not isinstance(exc, PipelineError):
                raise PipelineError(name, str(exc)) from exc
            return False

    return _StageContext()


def simulate(cfg: SimConfig, seed: int | None = None) -> Recording:
    """Run the full synthesis pipeline for one recording."""
    validate_hard(cfg)
    master = int(cfg.seed if seed is None else seed)
    fs = cfg.fs
    n_cycles = cfg.cycles_per_sample

    with _stage("sampling"):
        thetas = sample_thetas(cfg.prior_spec(), cfg.theta_bounds(), n_cycles,
                               component_seed(master, "theta"))
        if cfg.stabilize_delta_t and len(cfg.delta_t_pool):
            stabilized = bootstrap_delta_t(cfg.delta_t_pool, n_cycles,
                                           component_seed(master, "delta_t"))
            thetas = [
                CycleTheta(t.a_s1, t.a_s2, t.tau_s1, t.tau_s2, float(dt))
                for t, dt in zip(thetas, stabilized)
            ]

    with _stage("rr-series"):
        rr = make_rr_series(cfg.rr_mode, cfg.hrv(), n_cycles,
                            seed=component_seed(master, "rr"),
                            values=cfg.rr_values or None)

    with _stage("fetal-train"):
        fetal = render_fetal_train(thetas, rr, cfg.f0_s1, cfg.f0_s2, fs,
                                   shared_tau=cfg.shared_tau, attack=cfg.ta)
    n = len(fetal)
    duration = n / fs

    with _stage("maternal-train"):
        maternal = render_maternal_train(cfg.maternal(), duration, fs, attack=cfg.ta)
        m_samples = np.zeros(n)
        m = min(n, len(maternal))
        m_samples[:m] = maternal.samples[:m]

    with _stage("transmission"):
        h = cascade_response(cfg.transmission(), fs)
        cardiac = propagate(Signal(fetal.samples + m_samples, fs), h)

    with _stage("uterine-contractions"):
        uc_seed = component_seed(master, "uterine")
        uc_env, uc_noise = uterine_contraction_track(cfg.uterine(), duration, fs, uc_seed)
        uc_event_list = uterine_events(cfg.uterine(), duration, uc_seed)
        cardiac_att = cardiac.samples * (1.0 - uc_env.samples)

    with _stage("noise"):
        cardiac_rms = rms(cardiac_att)
        if np.isfinite(cfg.snr_db):
            raw = ar1_noise(cfg.rho, n, component_seed(master, "noise-ar1"), fs=fs)
            shaped = gain_modulate(raw, cfg.gamma, cfg.lp_cutoff,
                                   component_seed(master, "noise-gain"))
            unit = shaped.samples / rms(shaped.samples)
            sigma_n = noise_scale_for_snr(cardiac_rms, cfg.snr_db)
            noise_scaled = sigma_n * unit
        else:
            sigma_n = 0.0
            noise_scaled = np.zeros(n)

    with _stage("artifacts"):
        move_seed = component_seed(master, "movement")
        movement = movement_artifacts(cfg.movement(), duration, fs, move_seed).samples * sigma_n
        uc_noise_scaled = uc_noise.samples * sigma_n
        # artifacts ride the noise scale; with noise disabled they are absent
        # from the mixture, so the ground truth must not list them either
        move_event_list = movement_events(cfg.movement(), duration, move_seed) \
            if sigma_n > 0 else []

    mixture = cardiac_att + noise_scaled + movement + uc_noise_scaled

    # Realized cycle onsets live on the sample grid: cycle k starts at the
    # cumulative sum of the rounded per-cycle lengths, not at the ideal
    # prefix sums (which drift by the accumulated rounding).
    nominal_rr = float(np.mean(rr.values))
    nominal_len = int(round(nominal_rr * fs))
    target_lens = np.array([int(round(v * fs)) for v in rr.values])
    onsets = np.concatenate([[0], np.cumsum(target_lens[:-1])]) / fs
    stretch = target_lens / max(nominal_len, 1)
    s2_offsets = np.array([int(round(t.delta_t * fs)) for t in thetas]) / fs
    annotations = {
        "fs": fs,
        "duration_s": duration,
        "n_cycles": n_cycles,
        "onset_times_s": [float(t) for t in onsets],
        "onset_times_nominal_s": [float(t) for t in onset_times(rr)],
        "rr_s": [float(v) for v in rr.values],
        "theta": [list(map(float, t.as_array())) for t in thetas],
        "theta_fields": ["a_s1", "a_s2", "tau_s1", "tau_s2", "delta_t"],
        "delta_t_s": [float(t.delta_t) for t in thetas],
        "delta_t_realized_s": [float(o * s) for o, s in zip(s2_offsets, stretch)],
        "s2_onset_times_s": [float(t + o * s)
                             for t, o, s in zip(onsets, s2_offsets, stretch)],
        "shared_tau": bool(cfg.shared_tau),
        "sigma_n": float(sigma_n),
        "movement_events": [{"start_s": float(e.start), "duration_s": float(e.duration),
                             "thump": bool(e.thump)} for e in move_event_list],
        "uc_events": [{"start_s": float(e.start), "duration_s": float(e.duration)}
                      for e in uc_event_list],
    }
    components = {
        "fetal_clean": fetal.samples,
        "maternal_clean": m_samples,
        "cardiac_propagated": cardiac.samples,
        "uc_attenuation": uc_env.samples,
        "noise": noise_scaled,
        "movement": movement,
        "uc_noise": uc_noise_scaled,
    }
    return Recording(Signal(mixture, fs), components, annotations, cfg.to_dict(), master)


def realized_snr_db(rec: Recording) -> float:
    """SNR of the UC-attenuated cardiac component against the scaled noise."""
    c = rec.components
    cardiac = c["cardiac_propagated"] * (1.0 - c["uc_attenuation"])
    noise_rms = rms(c["noise"])
    if noise_rms == 0:
        raise FpcgError("noise component is silent; SNR undefined")
    return 20.0 * np.log10(rms(cardiac) / noise_rms)
