"""Stateless JSON synthesis API consumed by the web front end.

GET  /presets     -> preset catalog + parameter map (defaults, slider bounds)
POST /synthesize  -> mixture/envelope/ACF/PSD arrays + ground-truth annotations
POST /analyze     -> the same analysis curves for an uploaded waveform

Overrides outside the suggested ranges are rejected with a 422 naming the
offending field; synthesis failures return a structured error carrying the
pipeline stage. Response arrays are capped (default 60 s) to bound payloads.
"""

from __future__ import annotations

from pathlib import Path
from typing import Any

import numpy as np
from fastapi import FastAPI, HTTPException
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from . import analysis
from .config import apply_overrides, catalog, load_config
from .errors import ConfigError, FpcgError, PipelineError
from .kernel import Signal
from .simulate import Recording, simulate

MAX_SECONDS = 60.0
MAX_ANALYZE_SAMPLES = 2_000_000


class SynthesizeRequest(BaseModel):
    preset: str | None = None
    overrides: dict[str, Any] = Field(default_factory=dict)
    n_cycles: int | None = Field(default=None, ge=1, le=1000)
    seed: int | None = None


class AnalyzeRequest(BaseModel):
    samples: list[float]
    fs: float = Field(gt=0)


def _psd_payload(mixture: Signal) -> dict:
    seg_len = min(int(round(2.0 * mixture.fs)), len(mixture))
    psd = analysis.welch_psd_db(mixture, seg_len=seg_len)
    return {"freq": psd.freq.tolist(), "db": psd.db.tolist(),
            "db_std": psd.db_std.tolist()}


def _curves(mixture: Signal) -> dict:
    cfg = analysis.PreprocConfig()
    result = analysis.analyze(mixture, cfg)
    acf = analysis.cycle_averaged_acf(result.cycles)
    return {
        "t0_s": result.t0,
        "envelope": result.envelope.samples.tolist(),
        "acf": {"lag": acf.lag.tolist(), "value": acf.value.tolist()},
        "psd": _psd_payload(mixture),
    }


def _ground_truth_acf(rec: Recording) -> dict:
    """Per-cycle envelope ACF cut at the known cycle boundaries.

    The interactive panel must not fail on parameter corners where blind
    segmentation would; the validation CLI still exercises the blind path.
    """
    cfg = analysis.PreprocConfig()
    env = analysis.preprocess_envelope(rec.mixture, cfg).samples
    fs = rec.fs
    bounds = [int(round(t * fs)) for t in rec.annotations["onset_times_s"]] + [len(env)]
    segments = [env[a:b] for a, b in zip(bounds[:-1], bounds[1:]) if b - a >= 8]
    if not segments:
        raise PipelineError("analysis", "recording too short for a cycle-averaged ACF")
    acf = analysis.averaged_envelope_acf(segments, fs)
    return {"lag": acf.lag.tolist(), "value": acf.value.tolist()}


def create_app(static_dir: str | Path | None = None) -> FastAPI:
    app = FastAPI(title="fpcgsim synthesis API", version="0.1.0")

    @app.exception_handler(PipelineError)
    async def _pipeline_error(request, exc: PipelineError):
        return JSONResponse(status_code=500,
                            content={"error": {"stage": exc.stage, "message": str(exc)}})

    @app.exception_handler(FpcgError)
    async def _domain_error(request, exc: FpcgError):
        return JSONResponse(status_code=500,
                            content={"error": {"stage": "request", "message": str(exc)}})

    @app.get("/presets")
    def presets() -> dict:
        return catalog()

    @app.post("/synthesize")
    def synthesize(req: SynthesizeRequest) -> dict:
        try:
            cfg = load_config(preset=req.preset)
            if req.n_cycles is not None:
                cfg = apply_overrides(cfg, {"cycles_per_sample": req.n_cycles})
            if req.overrides:
                cfg = apply_overrides(cfg, req.overrides, strict=True)
        except ConfigError as exc:
            field = _offending_field(exc, req.overrides)
            raise HTTPException(status_code=422,
                                detail={"field": field, "message": str(exc)})
        rec = simulate(cfg, seed=req.seed)
        max_len = int(round(MAX_SECONDS * rec.fs))
        truncated = len(rec.mixture) > max_len
        mixture = Signal(rec.mixture.samples[:max_len], rec.fs)
        envelope = analysis.preprocess_envelope(mixture)
        return {
            "fs": rec.fs,
            "seed": rec.seed,
            "truncated": truncated,
            "mixture": mixture.samples.tolist(),
            "envelope": envelope.samples.tolist(),
            "psd": _psd_payload(mixture),
            "acf": _ground_truth_acf(rec),
            "annotations": rec.annotations,
        }

    @app.post("/analyze")
    def analyze_waveform(req: AnalyzeRequest) -> dict:
        if len(req.samples) > MAX_ANALYZE_SAMPLES:
            raise HTTPException(status_code=422,
                                detail={"field": "samples", "message": "too many samples"})
        try:
            return _curves(Signal(np.asarray(req.samples), req.fs))
        except FpcgError as exc:
            raise HTTPException(status_code=422,
                                detail={"field": "samples", "message": str(exc)})

    if static_dir is not None and Path(static_dir).exists():
        from fastapi.staticfiles import StaticFiles
        app.mount("/", StaticFiles(directory=str(static_dir), html=True), name="ui")

    return app


def _offending_field(exc: ConfigError, overrides: dict) -> str | None:
    text = str(exc)
    for key in overrides:
        if key in text:
            return key
    return None


def serve_synthesis_api(port: int = 8000, host: str = "127.0.0.1",
                        static_dir: str | Path | None = None) -> None:
    import uvicorn

    uvicorn.run(create_app(static_dir=static_dir), host=host, port=port)
