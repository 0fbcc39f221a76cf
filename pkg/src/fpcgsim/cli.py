"""Command-line interface: simulate / calibrate / validate / presets / serve."""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from .analysis import PreprocConfig, analyze, compare_stats
from .audio_io import export_recording, ingest_recording
from .config import SimConfig, list_presets, load_config, preset_overrides, serialize_config
from .errors import FpcgError
from .fitting import (calibrate_cycles, default_global_bounds, gaussian_corner_samples,
                      measure_delta_t, summarize_parameters)
from .seeding import sample_seed
from .simulate import simulate


def _parse_sets(pairs: list[str]) -> dict[str, str]:
    out = {}
    for item in pairs:
        if "=" not in item:
            raise FpcgError(f"--set expects key=value, got {item!r}")
        key, value = item.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def _load(args) -> SimConfig:
    return load_config(source=args.config, preset=args.preset,
                       overrides=_parse_sets(args.set), strict=args.strict)


def cmd_simulate(args) -> int:
    cfg = _load(args)
    out_dir = Path(args.out)
    master = cfg.seed if args.seed is None else args.seed
    n = cfg.num_samples if args.samples is None else args.samples
    for i in range(n):
        seed = master if n == 1 else sample_seed(master, i)
        rec = simulate(cfg, seed=seed)
        stem = "fpcg" if n == 1 else f"fpcg_{i:03d}"
        paths = export_recording(rec, out_dir, stem=stem, fmt=args.format,
                                 components=args.components, pcm16=args.pcm16)
        print(f"{stem}: seed={seed} duration={rec.annotations['duration_s']:.2f}s "
              f"-> {paths[0]}")
    (out_dir / "config.ini").write_text(serialize_config(cfg))
    return 0


def _write_curve_csv(path: Path, header: list[str], columns: list[np.ndarray]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in zip(*columns):
            writer.writerow([f"{v:.10g}" for v in row])


def cmd_calibrate(args) -> int:
    cfg = _load(args)
    sig = ingest_recording(args.input, fs_hint=args.fs_hint)
    result = analyze(sig, PreprocConfig())
    fits = calibrate_cycles(result.cycles, default_global_bounds(),
                            (cfg.f0_s1, cfg.f0_s2), attack=cfg.ta)
    converged = sum(f.converged for f in fits)
    print(f"{len(result.cycles)} cycles segmented (T0={result.t0:.4f}s), "
          f"{converged} fits converged")
    summary = summarize_parameters(fits, dispersion_mult=args.dispersion,
                                   global_bounds=default_global_bounds())
    corner = gaussian_corner_samples(summary, n=args.corner_samples, seed=cfg.seed)
    delta_t = measure_delta_t(result.cycles)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "summary.json", "w") as fh:
        json.dump({
            "summary": summary.to_dict(),
            "delta_t_measurements_s": delta_t.tolist(),
            "fits": [f.to_dict() for f in fits],
        }, fh, indent=1)
    with open(out_dir / "corner.json", "w") as fh:
        json.dump(corner.to_dict(), fh)
    _write_curve_csv(out_dir / "corner_samples.csv", list(corner.fields),
                     [corner.samples[:, i] for i in range(corner.samples.shape[1])])
    print(f"summary -> {out_dir / 'summary.json'}")
    return 0


def cmd_validate(args) -> int:
    real = ingest_recording(args.real, fs_hint=args.fs_hint)
    sim = ingest_recording(args.sim, fs_hint=args.fs_hint)
    report = compare_stats(real, sim)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w") as fh:
        json.dump(report.to_dict(), fh, indent=1)
    if args.curves:
        stem = out.with_suffix("")
        _write_curve_csv(Path(f"{stem}_acf.csv"), ["lag_s", "real", "sim"],
                         [report.acf_real.lag,
                          report.acf_real.value,
                          np.interp(report.acf_real.lag, report.acf_sim.lag,
                                    report.acf_sim.value)])
        _write_curve_csv(Path(f"{stem}_psd.csv"), ["freq_hz", "real_db", "sim_db"],
                         [report.psd_real.freq,
                          report.psd_real.db,
                          np.interp(report.psd_real.freq, report.psd_sim.freq,
                                    report.psd_sim.db)])
    print(f"acf_rmse={report.acf_rmse:.4f} psd_rmse_db={report.psd_rmse_db:.2f} "
          f"envelope_corr={report.envelope_corr:.4f} -> {out}")
    return 0


def cmd_presets(args) -> int:
    presets = list_presets()
    if args.action == "list":
        for name, desc in presets.items():
            print(f"{name}: {desc}")
        return 0
    if args.name not in presets:
        raise FpcgError(f"unknown preset {args.name!r}; available: {sorted(presets)}")
    print(f"# {presets[args.name]}")
    for key, value in preset_overrides(args.name).items():
        print(f"{key} = {value}")
    return 0


def cmd_serve(args) -> int:
    from .api import serve_synthesis_api

    static = None
    if args.static:
        if Path(args.static).is_dir():
            static = args.static
        else:
            print(f"warning: static directory {args.static!r} not found; "
                  "serving the API only", file=sys.stderr)
    serve_synthesis_api(port=args.port, host=args.host, static_dir=static)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fpcgsim",
                                     description="Abdominal fetal PCG simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_config_opts(p):
        p.add_argument("--config", help="INI configuration file")
        p.add_argument("--preset", help="named preset applied before the config file")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override one configuration key")
        p.add_argument("--strict", action="store_true",
                       help="reject values outside suggested ranges")

    p = sub.add_parser("simulate", help="synthesize recordings with ground truth")
    add_config_opts(p)
    p.add_argument("--seed", type=int, help="master seed (defaults to the config seed)")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--samples", type=int, help="override num_samples")
    p.add_argument("--format", choices=("wav", "csv"), default="wav")
    p.add_argument("--components", action="store_true", help="export component tracks")
    p.add_argument("--pcm16", action="store_true", help="16-bit PCM instead of float32")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("calibrate", help="fit per-cycle parameters from a recording")
    add_config_opts(p)
    p.add_argument("--input", required=True, help="WAV or single-column CSV recording")
    p.add_argument("--fs-hint", type=float, help="sample rate for CSV input")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--dispersion", type=float, default=2.0,
                   help="box half-width in per-component standard deviations")
    p.add_argument("--corner-samples", type=int, default=20000)
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("validate", help="compare two recordings under one preprocessing")
    p.add_argument("--real", required=True)
    p.add_argument("--sim", required=True)
    p.add_argument("--fs-hint", type=float)
    p.add_argument("--out", required=True, help="report JSON path")
    p.add_argument("--curves", action="store_true", help="also write ACF/PSD curve CSVs")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("presets", help="list or show named presets")
    p.add_argument("action", choices=("list", "show"))
    p.add_argument("name", nargs="?")
    p.set_defaults(func=cmd_presets)

    p = sub.add_parser("serve", help="run the JSON synthesis API")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--static", help="static front-end directory to mount")
    p.set_defaults(func=cmd_serve)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "presets" and args.action == "show" and not args.name:
        parser.error("presets show requires a preset name")
    try:
        return args.func(args)
    except FpcgError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
