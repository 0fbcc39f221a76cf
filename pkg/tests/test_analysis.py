import numpy as np
import pytest

from fpcgsim.analysis import (PreprocConfig, analyze, averaged_envelope_acf,
                              bandpass_zero_phase, compare_stats, cycle_averaged_acf,
                              estimate_period, max_shifted_correlation, preprocess_envelope,
                              segment_cycles, welch_psd_db)
from fpcgsim.errors import AnalysisError, ParameterError, PeriodicityError, SegmentationError
from fpcgsim.heart import CycleTheta, RRSeries, render_cycle, render_fetal_train
from fpcgsim.kernel import Signal

FS = 1000.0
THETA = CycleTheta(1.0, 0.5, 0.022, 0.022, 0.20)


def clean_train(n_cycles=10, rr=0.43, fs=FS, theta=THETA):
    series = RRSeries(np.full(n_cycles, rr), "constant")
    return render_fetal_train([theta] * n_cycles, series, 40.0, 60.0, fs)


def test_envelope_of_pure_tone_is_flat():
    t = np.arange(int(4 * FS)) / FS
    x = Signal(np.sin(2 * np.pi * 60.0 * t), FS)
    env = preprocess_envelope(x).samples
    core = env[int(0.5 * FS):-int(0.5 * FS)]
    assert core.max() - core.min() < 0.05 * core.max()


def test_envelope_of_silence_is_silent():
    env = preprocess_envelope(Signal(np.zeros(4000), FS))
    assert not np.any(env.samples)


def test_envelope_scale_invariant():
    x = clean_train()
    a = preprocess_envelope(x).samples
    b = preprocess_envelope(Signal(37.0 * x.samples, FS)).samples
    np.testing.assert_allclose(a, b, atol=1e-12)


def test_band_infeasible_below_300hz():
    with pytest.raises(AnalysisError, match="shrink"):
        preprocess_envelope(Signal(np.zeros(2000) + 1.0, 250.0))


def test_band_clamped_near_nyquist_with_warning():
    t = np.arange(int(8 * 333)) / 333.0
    x = Signal(np.sin(2 * np.pi * 40.0 * t), 333.0)
    with pytest.warns(UserWarning, match="clamped"):
        preprocess_envelope(x)


def test_estimate_period_140_bpm():
    x = clean_train(n_cycles=30, rr=60.0 / 140.0)
    env = preprocess_envelope(x)
    t0 = estimate_period(env)
    assert t0 == pytest.approx(60.0 / 140.0, abs=1.0 / FS)


def test_estimate_period_150_bpm():
    x = clean_train(n_cycles=30, rr=0.40)
    t0 = estimate_period(preprocess_envelope(x))
    assert t0 == pytest.approx(0.40, abs=1.0 / FS)


def test_estimate_period_rejects_out_of_band_periodicity():
    # events 1 s apart: periodic at 60 bpm, outside the 80-200 bpm search band
    n = int(10 * FS)
    x = np.zeros(n)
    buf = render_cycle(CycleTheta(1.0, 0.5, 0.02, 0.02, 0.2), 40.0, 60.0, FS)
    for k in range(9):
        start = int(k * FS)
        x[start:start + len(buf)] += buf
    with pytest.raises(PeriodicityError):
        estimate_period(preprocess_envelope(Signal(x, FS)))


def test_estimate_period_rejects_flat_envelope():
    with pytest.raises((PeriodicityError, AnalysisError)):
        estimate_period(Signal(np.ones(4000), FS))


def test_segmentation_recovers_known_onsets():
    x = clean_train(n_cycles=10, rr=0.43)
    res = analyze(x)
    true_onsets = 0.43 * np.arange(10)
    matched = 0
    for t in true_onsets:
        if np.min(np.abs(res.cycles.onsets - t)) <= 0.010:
            matched += 1
    assert matched >= 9  # edge cycles may lose their onset to filter warm-up


def test_segmentation_discards_implausible_rr():
    # insert a 1.0 s silent gap: the spanning interval is implausible
    x = clean_train(n_cycles=6, rr=0.43).samples
    gap = np.zeros(int(0.57 * FS))
    y = Signal(np.concatenate([x[:int(2 * 0.43 * FS)], gap, x[int(2 * 0.43 * FS):]]), FS)
    res = analyze(y)
    assert np.all((res.cycles.rr >= 0.25) & (res.cycles.rr <= 0.90))


def test_segmented_cycles_are_zero_mean():
    res = analyze(clean_train(n_cycles=12))
    for cyc in res.cycles.cycles:
        assert abs(cyc.mean()) < 1e-9


def test_segmentation_needs_enough_peaks():
    x = clean_train(n_cycles=10)
    env = preprocess_envelope(x)
    with pytest.raises(SegmentationError):
        segment_cycles(Signal(np.zeros(len(env)) + 1e-6, FS), 0.43)


def test_cycle_averaged_acf_lag0_and_bounds():
    res = analyze(clean_train(n_cycles=12))
    acf = cycle_averaged_acf(res.cycles)
    assert acf.value[0] == pytest.approx(1.0, abs=1e-12)
    assert np.all(acf.value <= 1.0 + 1e-9)
    assert np.all(acf.value >= -1.0 - 1e-9)
    assert acf.lag[0] == 0.0


def test_identical_cycles_average_to_single_acf():
    seg = np.abs(render_cycle(THETA, 40.0, 60.0, FS, n_samples=430))
    single = averaged_envelope_acf([seg], FS)
    averaged = averaged_envelope_acf([seg.copy() for _ in range(5)], FS)
    np.testing.assert_allclose(averaged.value, single.value, atol=1e-12)


def test_welch_peak_at_tone_frequency():
    t = np.arange(int(20 * FS)) / FS
    x = Signal(np.sin(2 * np.pi * 50.0 * t), FS)
    psd = welch_psd_db(x)
    df = psd.freq[1] - psd.freq[0]
    assert abs(psd.freq[np.argmax(psd.db)] - 50.0) <= df


def test_welch_parseval_on_bandlimited_noise():
    rng = np.random.default_rng(0)
    x = Signal(rng.standard_normal(int(30 * FS)), FS)
    psd = welch_psd_db(x)
    linear = 10.0 ** (psd.db / 10.0)
    df = psd.freq[1] - psd.freq[0]
    power = float(np.sum(0.5 * (linear[:-1] + linear[1:])) * df)
    # the bandpassed input is RMS-normalized, so its power is 1
    assert power == pytest.approx(1.0, rel=0.05)


def test_welch_white_noise_flat_in_band():
    rng = np.random.default_rng(1)
    x = Signal(rng.standard_normal(int(120 * FS)), FS)
    psd = welch_psd_db(x, seg_len=int(1.0 * FS))  # >= 100 averaged segments
    sel = (psd.freq >= 35.0) & (psd.freq <= 130.0)  # interior, away from filter skirts
    assert psd.db[sel].max() - psd.db[sel].min() < 3.0


def test_welch_rejects_short_signal():
    with pytest.raises(ParameterError):
        welch_psd_db(Signal(np.zeros(100), FS), seg_len=200)


def test_zero_phase_bandpass_symmetric_impulse_response():
    n = 4001
    x = np.zeros(n)
    x[n // 2] = 1.0
    y = bandpass_zero_phase(Signal(x, FS), PreprocConfig()).samples
    np.testing.assert_allclose(y, y[::-1], atol=1e-9)
    assert np.argmax(np.abs(y)) == n // 2


def test_max_shifted_correlation_identity():
    rng = np.random.default_rng(2)
    a = rng.standard_normal(5000)
    assert max_shifted_correlation(a, a, 100) == pytest.approx(1.0, abs=1e-12)


def test_compare_stats_self_comparison():
    x = clean_train(n_cycles=20)
    rep = compare_stats(x, x)
    assert rep.acf_rmse == pytest.approx(0.0, abs=1e-12)
    assert rep.psd_rmse_db == pytest.approx(0.0, abs=1e-12)
    assert rep.envelope_corr == pytest.approx(1.0, abs=1e-9)


def test_compare_stats_scale_invariant():
    x = clean_train(n_cycles=20)
    scaled = Signal(5.0 * x.samples, FS)
    rep = compare_stats(x, scaled)
    assert rep.acf_rmse == pytest.approx(0.0, abs=1e-9)
    assert rep.psd_rmse_db == pytest.approx(0.0, abs=1e-6)
    assert rep.envelope_corr == pytest.approx(1.0, abs=1e-9)


def test_compare_stats_attributes_failures():
    good = clean_train(n_cycles=20)
    flat = Signal(np.zeros(len(good)), FS)
    with pytest.raises(AnalysisError, match="real"):
        compare_stats(flat, good)
    with pytest.raises(AnalysisError, match="simulated"):
        compare_stats(good, flat)


def test_compare_stats_across_sample_rates():
    x1000 = clean_train(n_cycles=20, fs=1000.0)
    x500 = clean_train(n_cycles=20, fs=500.0)
    rep = compare_stats(x1000, x500)
    assert rep.acf_rmse < 0.08
    assert rep.envelope_corr > 0.95
