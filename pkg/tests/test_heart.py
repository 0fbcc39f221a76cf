import numpy as np
import pytest

from fpcgsim.errors import ConfigError, CycleGeometryError, ParameterError
from fpcgsim.heart import (CycleTheta, HRVConfig, MaternalConfig, RRSeries, apply_shared_tau,
                           make_rr_series, onset_times, render_cycle, render_fetal_train,
                           render_maternal_train)

FS = 1000.0
THETA = CycleTheta(a_s1=1.0, a_s2=0.6, tau_s1=0.02, tau_s2=0.02, delta_t=0.20)


def count_bursts(x, threshold_frac=0.2, min_gap_s=0.05, fs=FS):
    """Independent event counter: above-threshold runs separated by quiet gaps."""
    hot = np.abs(x) > threshold_frac * np.max(np.abs(x))
    idx = np.flatnonzero(hot)
    if idx.size == 0:
        return 0
    gaps = np.diff(idx) > min_gap_s * fs
    return 1 + int(gaps.sum())


def test_constant_rr_series():
    cfg = HRVConfig(mean_rr=60.0 / 140.0)
    rr = make_rr_series("constant", cfg, 5)
    np.testing.assert_allclose(rr.values, 60.0 / 140.0)
    assert rr.mode == "constant"


def test_constant_rr_outside_band_rejected():
    with pytest.raises(ConfigError):
        make_rr_series("constant", HRVConfig(mean_rr=1.5), 5)


def test_weak_hrv_zero_alpha_is_mean_plus_jitter():
    cfg = HRVConfig(mean_rr=0.45, alpha=0.0, jitter_std=0.0)
    rr = make_rr_series("weak_hrv", cfg, 50, seed=1)
    np.testing.assert_allclose(rr.values, 0.45)


def test_weak_hrv_monte_carlo_mean():
    cfg = HRVConfig(mean_rr=0.45, alpha=0.03, jitter_std=0.01)
    rr = make_rr_series("weak_hrv", cfg, 10_000, seed=3)
    combined_std = np.sqrt(cfg.alpha ** 2 + cfg.jitter_std ** 2)
    assert rr.values.mean() == pytest.approx(0.45, abs=3 * combined_std / 100.0)
    assert np.all((rr.values >= 0.25) & (rr.values <= 0.90))


def test_weak_hrv_deterministic():
    cfg = HRVConfig(mean_rr=0.45)
    a = make_rr_series("weak_hrv", cfg, 100, seed=9).values
    b = make_rr_series("weak_hrv", cfg, 100, seed=9).values
    np.testing.assert_array_equal(a, b)


def test_explicit_rr_series_validated():
    cfg = HRVConfig(mean_rr=0.45)
    rr = make_rr_series("explicit", cfg, 3, values=[0.4, 0.5, 0.45])
    np.testing.assert_allclose(rr.values, [0.4, 0.5, 0.45])
    with pytest.raises(ConfigError):
        make_rr_series("explicit", cfg, 3, values=[0.4, 1.2, 0.45])
    with pytest.raises(ConfigError):
        make_rr_series("explicit", cfg, 2, values=[0.4, 0.5, 0.45])


def test_onset_times_prefix_sums():
    rr = RRSeries(np.array([0.4, 0.5, 0.45]), "explicit")
    np.testing.assert_allclose(onset_times(rr), [0.0, 0.4, 0.9])
    rr2 = RRSeries(np.full(3, 0.4286), "constant")
    np.testing.assert_allclose(onset_times(rr2), [0.0, 0.4286, 0.8572])
    assert onset_times(RRSeries(np.array([0.5]), "constant")).tolist() == [0.0]


def test_apply_shared_tau():
    theta = CycleTheta(1.0, 0.5, 0.02, 0.04, 0.2)
    out = apply_shared_tau(theta)
    assert out.tau_s1 == out.tau_s2 == pytest.approx(0.03)
    assert (out.a_s1, out.a_s2, out.delta_t) == (1.0, 0.5, 0.2)
    fixed = CycleTheta(1.0, 0.5, 0.025, 0.025, 0.2)
    assert apply_shared_tau(fixed) == fixed


def test_train_length_contract():
    rr = make_rr_series("weak_hrv", HRVConfig(mean_rr=0.43, alpha=0.04, jitter_std=0.01),
                        20, seed=5)
    train = render_fetal_train([THETA] * 20, rr, 40.0, 60.0, FS)
    assert len(train) == int(sum(round(v * FS) for v in rr.values))


def test_single_cycle_without_s2():
    theta = CycleTheta(1.0, 0.0, 0.02, 0.02, 0.20)
    rr = RRSeries(np.array([0.5]), "constant")
    train = render_fetal_train([theta], rr, 40.0, 60.0, FS)
    assert count_bursts(train.samples) == 1
    end = int(round((0.008 + 8 * 0.02) * FS))
    assert not np.any(train.samples[end + 1:])


def test_identical_cycles_are_shift_invariant():
    rr = RRSeries(np.full(3, 0.5), "constant")
    train = render_fetal_train([THETA] * 3, rr, 40.0, 60.0, FS).samples
    cycle = int(0.5 * FS)
    np.testing.assert_array_equal(train[:cycle], train[cycle:2 * cycle])
    np.testing.assert_array_equal(train[:cycle], train[2 * cycle:])


def test_event_count_over_ten_cycles():
    theta = CycleTheta(1.0, 1.0, 0.02, 0.02, 0.20)
    rr = RRSeries(np.full(10, 0.5), "constant")
    train = render_fetal_train([theta] * 10, rr, 40.0, 60.0, FS)
    assert count_bursts(train.samples) == 20


def test_superposition_without_stretching():
    thetas = [CycleTheta(1.0 + 0.02 * k, 0.5, 0.02, 0.025, 0.18 + 0.004 * k)
              for k in range(5)]
    rr = RRSeries(np.full(5, 0.5), "constant")
    train = render_fetal_train(thetas, rr, 40.0, 60.0, FS).samples
    total = int(5 * 0.5 * FS)
    manual = np.zeros(total)
    for k, theta in enumerate(thetas):
        buf = render_cycle(theta, 40.0, 60.0, FS)
        start = int(k * 0.5 * FS)
        keep = min(len(buf), total - start)
        manual[start:start + keep] += buf[:keep]
    np.testing.assert_allclose(train, manual, atol=1e-9)


def test_stretched_cycle_moves_s2_proportionally():
    # one long cycle among short ones: S2 lands at delta_t * rr/nominal
    rr = RRSeries(np.array([0.40, 0.40, 0.48, 0.40]), "explicit")
    thetas = [CycleTheta(1.0, 1.0, 0.02, 0.02, 0.20)] * 4
    train = render_fetal_train(thetas, rr, 40.0, 60.0, FS).samples
    nominal = float(np.mean(rr.values))
    start = int(round(0.40 * FS)) * 2
    tlen = int(round(0.48 * FS))
    cycle = np.abs(train[start:start + tlen])
    factor = tlen / round(nominal * FS)
    predicted = round(0.20 * FS) * factor
    s2_region = np.argmax(cycle[int(predicted - 30):int(predicted + 60)]) + predicted - 30
    # S2 burst peak lies within the stretched event's attack extent
    assert abs(s2_region - predicted) < 0.03 * FS


def test_delta_t_exceeding_rr_names_cycle():
    thetas = [THETA, CycleTheta(1.0, 0.5, 0.02, 0.02, 0.45), THETA]
    rr = RRSeries(np.full(3, 0.43), "constant")
    with pytest.raises(CycleGeometryError, match="cycle 1"):
        render_fetal_train(thetas, rr, 40.0, 60.0, FS)


def test_theta_count_must_match_rr():
    rr = RRSeries(np.full(3, 0.5), "constant")
    with pytest.raises(ParameterError):
        render_fetal_train([THETA] * 2, rr, 40.0, 60.0, FS)


def test_maternal_zero_scale_silent():
    cfg = MaternalConfig(global_scale=0.0)
    sig = render_maternal_train(cfg, 3.0, FS)
    assert len(sig) == 3000
    assert not np.any(sig.samples)


def test_maternal_beat_count_and_positions():
    cfg = MaternalConfig(mhr=80.0, global_scale=1.0)
    sig = render_maternal_train(cfg, 3.0, FS)
    assert count_bursts(sig.samples, min_gap_s=0.2) == 8  # 4 beats x (S1+S2)
    for onset in (0.0, 0.75, 1.5, 2.25):
        i = int(onset * FS)
        window = np.abs(sig.samples[i:i + 100])
        assert window.max() > 0.1 * np.abs(sig.samples).max()


def test_maternal_period_via_autocorrelation():
    cfg = MaternalConfig(mhr=80.0, global_scale=1.0)
    x = render_maternal_train(cfg, 30.0, FS).samples
    env = np.abs(x)
    env = env - env.mean()
    acf = np.correlate(env, env, mode="full")[len(env) - 1:]
    lags = slice(int(0.4 * FS), int(1.2 * FS))
    peak_lag = (np.argmax(acf[lags]) + int(0.4 * FS)) / FS
    assert peak_lag == pytest.approx(0.75, abs=2 / FS)


def test_maternal_and_fetal_paths_are_identical():
    # at 120 bpm the RR is an exact number of samples, so both quantizations agree
    cfg = MaternalConfig(mhr=120.0, a_s1=1.0, a_s2=0.6, f0_s1=40.0, f0_s2=60.0,
                         tau=0.02, delta_t=0.20, global_scale=1.0)
    duration = 4 * 0.5
    maternal = render_maternal_train(cfg, duration, FS).samples
    theta = CycleTheta(1.0, 0.6, 0.02, 0.02, 0.20)
    rr = RRSeries(np.full(4, 0.5), "constant")
    fetal = render_fetal_train([theta] * 4, rr, 40.0, 60.0, FS).samples
    np.testing.assert_array_equal(maternal, fetal)


def test_shared_tau_rendering_uses_mean_decay():
    theta = CycleTheta(1.0, 0.6, 0.02, 0.03, 0.20)
    averaged = apply_shared_tau(theta)
    rr = RRSeries(np.full(3, 0.5), "constant")
    shared = render_fetal_train([theta] * 3, rr, 40.0, 60.0, FS, shared_tau=True)
    explicit = render_fetal_train([averaged] * 3, rr, 40.0, 60.0, FS, shared_tau=False)
    np.testing.assert_array_equal(shared.samples, explicit.samples)
    plain = render_fetal_train([theta] * 3, rr, 40.0, 60.0, FS, shared_tau=False)
    assert not np.array_equal(shared.samples, plain.samples)


def test_maternal_config_validation():
    with pytest.raises(ParameterError):
        MaternalConfig(mhr=250.0)
    with pytest.raises(ParameterError):
        MaternalConfig(global_scale=-0.1)


def test_cycle_theta_validation_and_arrays():
    with pytest.raises(ParameterError):
        CycleTheta(-1.0, 0.5, 0.02, 0.02, 0.2)
    with pytest.raises(ParameterError):
        CycleTheta(1.0, 0.5, 0.0, 0.02, 0.2)
    theta = CycleTheta(1.0, 0.5, 0.02, 0.03, 0.2)
    assert CycleTheta.from_array(theta.as_array()) == theta
