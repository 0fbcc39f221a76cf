"""Waveform export/ingest: float32 WAV, CSV, and the JSON ground-truth sidecar."""

from __future__ import annotations

import csv
import json
from fractions import Fraction
from pathlib import Path

import numpy as np
from scipy.io import wavfile
from scipy.signal import resample_poly

from .errors import ConfigError, ParameterError
from .kernel import Signal
from .simulate import COMPONENT_NAMES, Recording


def write_wav(path: Path, x: Signal, pcm16: bool = False) -> None:
    rate = int(round(x.fs))
    if pcm16:
        peak = np.max(np.abs(x.samples)) or 1.0
        data = np.clip(x.samples / peak, -1.0, 1.0)
        wavfile.write(path, rate, (data * 32767).astype(np.int16))
    else:
        wavfile.write(path, rate, x.samples.astype(np.float32))


def export_recording(rec: Recording, out_dir: str | Path, stem: str = "fpcg",
                     fmt: str = "wav", components: bool = False,
                     pcm16: bool = False) -> list[Path]:
    """Write the mixture (WAV or CSV), optional per-component files, and the
    annotations sidecar. Returns the created paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    created: list[Path] = []
    if fmt == "wav":
        path = out_dir / f"{stem}.wav"
        write_wav(path, rec.mixture, pcm16=pcm16)
        created.append(path)
        if components:
            for name in COMPONENT_NAMES:
                cpath = out_dir / f"{stem}.{name}.wav"
                write_wav(cpath, Signal(rec.components[name], rec.fs), pcm16=pcm16)
                created.append(cpath)
    elif fmt == "csv":
        path = out_dir / f"{stem}.csv"
        names = list(COMPONENT_NAMES) if components else []
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["time_s", "mixture", *names])
            t = rec.mixture.times()
            cols = [rec.components[n] for n in names]
            for i in range(len(rec.mixture)):
                writer.writerow([f"{t[i]:.6f}", repr(rec.mixture.samples[i]),
                                 *(repr(c[i]) for c in cols)])
        created.append(path)
    else:
        raise ParameterError(f"unknown export format {fmt!r}")
    sidecar = out_dir / f"{stem}.annotations.json"
    with open(sidecar, "w") as fh:
        json.dump({"seed": rec.seed, "config": rec.config,
                   "annotations": rec.annotations}, fh, indent=1)
    created.append(sidecar)
    return created


def _read_csv_column(path: Path) -> np.ndarray:
    values = []
    with open(path) as fh:
        for line_no, line in enumerate(fh):
            item = line.strip().split(",")[0].strip()
            if not item:
                continue
            try:
                values.append(float(item))
            except ValueError:
                if line_no == 0:
                    continue  # header row
                raise ConfigError(f"{path}: non-numeric value {item!r} on line {line_no + 1}")
    if not values:
        raise ConfigError(f"{path}: no samples found")
    return np.asarray(values)


def resample_signal(x: Signal, target_fs: float) -> Signal:
    if target_fs == x.fs:
        return x
    frac = Fraction(target_fs / x.fs).limit_denominator(10000)
    return Signal(resample_poly(x.samples, frac.numerator, frac.denominator), target_fs)


def ingest_recording(path: str | Path, fs_hint: float | None = None,
                     target_fs: float | None = None) -> Signal:
    """Load a WAV or single-column CSV recording; optionally resample.

    WAV integer PCM is rescaled to [-1, 1]; CSV needs ``fs_hint``.
    """
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"recording not found: {path}")
    suffix = path.suffix.lower()
    if suffix == ".wav":
        rate, data = wavfile.read(path)
        data = np.asarray(data)
        if data.ndim == 2:
            data = data[:, 0]
        if np.issubdtype(data.dtype, np.integer):
            data = data.astype(np.float64) / float(np.iinfo(data.dtype).max)
        else:
            data = data.astype(np.float64)
        sig = Signal(data, float(rate))
    elif suffix == ".csv":
        if fs_hint is None:
            raise ConfigError("CSV input has no sample-rate header; pass fs_hint")
        sig = Signal(_read_csv_column(path), float(fs_hint))
    else:
        raise ConfigError(f"unsupported recording format {suffix!r} (need .wav or .csv)")
    if target_fs is not None:
        sig = resample_signal(sig, float(target_fs))
    return sig
