import json
import warnings

import pytest

from fpcgsim.cli import main
from fpcgsim.config import load_config
from fpcgsim.simulate import simulate
from fpcgsim.audio_io import export_recording


def run(argv):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return main(argv)


def test_simulate_writes_wav_and_sidecar(tmp_path, capsys):
    out = tmp_path / "out"
    code = run(["simulate", "--out", str(out), "--seed", "3",
                "--set", "cycles_per_sample=8", "--samples", "1"])
    assert code == 0
    assert (out / "fpcg.wav").exists()
    assert (out / "fpcg.annotations.json").exists()
    assert (out / "config.ini").exists()
    first = (out / "fpcg.wav").read_bytes()
    run(["simulate", "--out", str(out), "--seed", "3",
         "--set", "cycles_per_sample=8", "--samples", "1"])
    assert (out / "fpcg.wav").read_bytes() == first


def test_simulate_batch_naming(tmp_path):
    out = tmp_path / "batch"
    code = run(["simulate", "--out", str(out), "--seed", "1",
                "--set", "cycles_per_sample=5", "--samples", "3"])
    assert code == 0
    for i in range(3):
        assert (out / f"fpcg_{i:03d}.wav").exists()


def test_presets_list_and_show(capsys):
    assert run(["presets", "list"]) == 0
    text = capsys.readouterr().out
    for name in ("normal", "delta_t_shift", "s2_s1_ratio", "low_snr"):
        assert name in text
    assert run(["presets", "show", "low_snr"]) == 0
    shown = capsys.readouterr().out
    assert "snr_db" in shown


def test_presets_show_unknown_returns_1(capsys):
    assert run(["presets", "show", "zzz"]) == 1
    assert "error" in capsys.readouterr().err


def test_usage_error_exits_2():
    with pytest.raises(SystemExit) as exc:
        run(["simulate"])  # missing --out
    assert exc.value.code == 2


def test_validate_self_comparison(tmp_path, capsys):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        cfg = load_config(overrides={"cycles_per_sample": "30"})
    rec = simulate(cfg, seed=9)
    export_recording(rec, tmp_path, stem="a")
    report_path = tmp_path / "report.json"
    code = run(["validate", "--real", str(tmp_path / "a.wav"),
                "--sim", str(tmp_path / "a.wav"), "--out", str(report_path), "--curves"])
    assert code == 0
    report = json.loads(report_path.read_text())
    assert report["acf_rmse"] == pytest.approx(0.0, abs=1e-9)
    assert report["envelope_corr"] == pytest.approx(1.0, abs=1e-6)
    assert (tmp_path / "report_acf.csv").exists()
    assert (tmp_path / "report_psd.csv").exists()


def test_validate_missing_file_exits_1(tmp_path, capsys):
    code = run(["validate", "--real", str(tmp_path / "no.wav"),
                "--sim", str(tmp_path / "no.wav"), "--out", str(tmp_path / "r.json")])
    assert code == 1
    assert "error" in capsys.readouterr().err


def test_calibrate_on_synthetic_recording(tmp_path, capsys):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        cfg = load_config(overrides={"cycles_per_sample": "40", "snr_db": "20",
                                     "movement_enabled": "false", "uc_enabled": "false"})
    rec = simulate(cfg, seed=21)
    export_recording(rec, tmp_path, stem="rec")
    out = tmp_path / "cal"
    code = run(["calibrate", "--input", str(tmp_path / "rec.wav"),
                "--out", str(out), "--corner-samples", "5000"])
    assert code == 0
    summary = json.loads((out / "summary.json").read_text())
    conv = [f for f in summary["fits"] if f["converged"]]
    assert len(conv) >= 5
    assert (out / "corner.json").exists()
    assert (out / "corner_samples.csv").exists()
    box_lo = summary["summary"]["box_lower"]
    box_hi = summary["summary"]["box_upper"]
    assert all(lo < hi for lo, hi in zip(box_lo, box_hi))
    mean_dt = summary["summary"]["mean"][4]
    assert 0.14 < mean_dt < 0.26
