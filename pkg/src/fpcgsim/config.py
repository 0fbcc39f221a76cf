"""INI-backed simulator configuration.

One schema drives everything: dataclass defaults, INI parsing/serialization,
CLI ``--set`` overrides, the HTTP override map, range warnings (errors in
strict mode), and the slider catalog served to the front end. Keys are the
configuration names verbatim (``fhr``, ``snr_db``, ``beta1``,
``uc_attenuation``, ...); suggested ranges trigger warnings only, hard
physical invariants always raise.
"""

from __future__ import annotations

import configparser
import io
import warnings
from dataclasses import dataclass, fields
from importlib import resources
from pathlib import Path

from .errors import ConfigError
from .heart import HRVConfig, MaternalConfig
from .noise import MovementConfig, NoiseConfig, UterineConfig
from .sampling import ParamBounds, PriorSpec
from .transmission import TransmissionConfig

RR_MODES = ("constant", "explicit", "weak_hrv")
PRIOR_KINDS = ("uniform", "truncated_gaussian", "ensemble_mcmc")


class ConfigWarning(UserWarning):
    pass


@dataclass(frozen=True)
class ParamMeta:
    section: str
    kind: str                     # int | float | bool | str | pair | floats
    suggested: tuple | None = None
    choices: tuple | None = None
    field: str | None = None      # dataclass attribute when it differs from the key
    doc: str = ""


@dataclass
class SimConfig:
    # dataset / sampling grid
    num_samples: int = 10
    cycles_per_sample: int = 100
    fs: float = 1000.0
    # heart rates
    fhr: float = 140.0
    mhr: float = 80.0
    # fetal kernel hyperparameters
    f0_s1: float = 40.0
    f0_s2: float = 60.0
    ta: float = 0.008
    shared_tau: bool = False
    # maternal nuisance parameters
    maternal_scale: float = 0.25
    m_f0_s1: float = 20.0
    m_f0_s2: float = 35.0
    m_tau: float = 0.04
    m_delta_t: float = 0.30
    m_a_s1: float = 1.0
    m_a_s2: float = 0.7
    # RR / weak HRV
    rr_mode: str = "constant"
    hrv_alpha: float = 0.03
    hrv_jitter_std: float = 0.008
    hrv_drift_window: int = 10
    rr_clip_low: float = 0.25
    rr_clip_high: float = 0.90
    rr_values: tuple = ()
    # transmission
    r1: float = 0.01
    c1: float = 1500.0
    beta1: float = 100.0
    a1: float = 1.0
    r2: float = 0.03
    c2: float = 1540.0
    beta2: float = 300.0
    a2: float = 0.8
    use_delays: bool = True
    # additive noise
    snr_db: float = 10.0
    rho: float = 0.95
    gamma: float = 0.3
    lp_cutoff: float = 0.5
    # fetal movement artifacts
    movement_enabled: bool = True
    movement_intensity: float = 1.3
    movement_rate_per_min: float = 8.0
    movement_duration_range: tuple = (0.12, 0.45)
    movement_band: tuple = (15.0, 200.0)
    movement_thump_prob: float = 0.35
    # uterine contractions
    uc_enabled: bool = True
    uc_rate_per_10min: float = 4.0
    uc_duration_range: tuple = (10.0, 25.0)
    uc_rise_fall_frac: tuple = (0.35, 0.35)
    uc_attenuation: float = 0.45
    uc_noise_band: tuple = (0.5, 18.0)
    uc_noise_intensity: float = 0.8
    # per-cycle sampling
    prior: str = "uniform"
    a_s1_range: tuple = (0.8, 1.4)
    a_s2_range: tuple = (0.3, 0.6)
    tau_s1_range: tuple = (0.018, 0.032)
    tau_s2_range: tuple = (0.018, 0.032)
    delta_t_range: tuple = (0.16, 0.24)
    walkers: int = 32
    mcmc_steps: int = 500
    mcmc_burn_in: int = 200
    stabilize_delta_t: bool = False
    delta_t_pool: tuple = ()
    # reproducibility
    seed: int = 12345

    # ---- typed sub-configurations -------------------------------------
    def transmission(self) -> TransmissionConfig:
        return TransmissionConfig(a1=self.a1, beta1=self.beta1, r1=self.r1, c1=self.c1,
                                  a2=self.a2, beta2=self.beta2, r2=self.r2, c2=self.c2,
                                  use_delays=self.use_delays)

    def noise(self) -> NoiseConfig:
        return NoiseConfig(rho=self.rho, gamma=self.gamma,
                           lp_cutoff=self.lp_cutoff, snr_db=self.snr_db)

    def movement(self) -> MovementConfig:
        return MovementConfig(enabled=self.movement_enabled, intensity=self.movement_intensity,
                              rate_per_min=self.movement_rate_per_min,
                              duration_range=tuple(self.movement_duration_range),
                              band=tuple(self.movement_band),
                              thump_prob=self.movement_thump_prob)

    def uterine(self) -> UterineConfig:
        return UterineConfig(enabled=self.uc_enabled, rate_per_10min=self.uc_rate_per_10min,
                             duration_range=tuple(self.uc_duration_range),
                             rise_fall_frac=tuple(self.uc_rise_fall_frac),
                             attenuation=self.uc_attenuation,
                             noise_band=tuple(self.uc_noise_band),
                             noise_intensity=self.uc_noise_intensity)

    def hrv(self) -> HRVConfig:
        return HRVConfig(mean_rr=60.0 / self.fhr, alpha=self.hrv_alpha,
                         jitter_std=self.hrv_jitter_std, drift_window=self.hrv_drift_window,
                         rr_band=(self.rr_clip_low, self.rr_clip_high))

    def maternal(self) -> MaternalConfig:
        return MaternalConfig(mhr=self.mhr, a_s1=self.m_a_s1, a_s2=self.m_a_s2,
                              f0_s1=self.m_f0_s1, f0_s2=self.m_f0_s2, tau=self.m_tau,
                              delta_t=self.m_delta_t, global_scale=self.maternal_scale)

    def theta_bounds(self) -> ParamBounds:
        return ParamBounds.from_ranges(a_s1=self.a_s1_range, a_s2=self.a_s2_range,
                                       tau_s1=self.tau_s1_range, tau_s2=self.tau_s2_range,
                                       delta_t=self.delta_t_range)

    def prior_spec(self) -> PriorSpec:
        return PriorSpec(kind=self.prior, walkers=self.walkers,
                         steps=self.mcmc_steps, burn_in=self.mcmc_burn_in)

    def to_dict(self) -> dict:
        out = {}
        for f in fields(self):
            v = getattr(self, f.name)
            out[f.name] = list(v) if isinstance(v, tuple) else v
        return out


SCHEMA: dict[str, ParamMeta] = {
    "num_samples": ParamMeta("dataset", "int", doc="recordings per batch run"),
    "cycles_per_sample": ParamMeta("dataset", "int", doc="fetal cycles per recording"),
    "fs": ParamMeta("dataset", "float", (500.0, 2000.0), doc="sampling rate, Hz"),
    "fhr": ParamMeta("rates", "float", (120.0, 160.0), doc="fetal heart rate, bpm"),
    "mhr": ParamMeta("rates", "float", (60.0, 100.0), doc="maternal heart rate, bpm"),
    "f0_s1": ParamMeta("fetal", "float", (25.0, 60.0), doc="S1 carrier, Hz"),
    "f0_s2": ParamMeta("fetal", "float", (35.0, 90.0), doc="S2 carrier, Hz"),
    "ta": ParamMeta("fetal", "float", (0.004, 0.015), doc="event attack time, s"),
    "shared_tau": ParamMeta("fetal", "bool", doc="share one decay between S1 and S2"),
    "maternal_scale": ParamMeta("maternal", "float", (0.0, 2.0), doc="maternal interference gain"),
    "m_f0_s1": ParamMeta("maternal", "float", (10.0, 40.0)),
    "m_f0_s2": ParamMeta("maternal", "float", (15.0, 60.0)),
    "m_tau": ParamMeta("maternal", "float", (0.01, 0.10)),
    "m_delta_t": ParamMeta("maternal", "float", (0.20, 0.45)),
    "m_a_s1": ParamMeta("maternal", "float", (0.2, 2.0)),
    "m_a_s2": ParamMeta("maternal", "float", (0.2, 2.0)),
    "rr_mode": ParamMeta("hrv", "str", choices=RR_MODES),
    "hrv_alpha": ParamMeta("hrv", "float", (0.0, 0.10), doc="drift scale, s"),
    "hrv_jitter_std": ParamMeta("hrv", "float", (0.0, 0.03), doc="jitter std, s"),
    "hrv_drift_window": ParamMeta("hrv", "int", (2, 50), doc="drift smoothing window, cycles"),
    "rr_clip_low": ParamMeta("hrv", "float"),
    "rr_clip_high": ParamMeta("hrv", "float"),
    "rr_values": ParamMeta("hrv", "floats", doc="explicit RR series, s"),
    "r1": ParamMeta("transmission", "float", (0.005, 0.02)),
    "c1": ParamMeta("transmission", "float", (1400.0, 1600.0)),
    "beta1": ParamMeta("transmission", "float", (50.0, 150.0)),
    "A1": ParamMeta("transmission", "float", (0.5, 1.5), field="a1"),
    "r2": ParamMeta("transmission", "float", (0.02, 0.05)),
    "c2": ParamMeta("transmission", "float", (1500.0, 1600.0)),
    "beta2": ParamMeta("transmission", "float", (200.0, 400.0)),
    "A2": ParamMeta("transmission", "float", (0.5, 1.0), field="a2"),
    "use_delays": ParamMeta("transmission", "bool", doc="apply r/c onset delays"),
    "snr_db": ParamMeta("noise", "float", (5.0, 20.0)),
    "rho": ParamMeta("noise", "float", (0.0, 0.99), doc="AR(1) coefficient"),
    "gamma": ParamMeta("noise", "float", (0.0, 1.0), doc="gain modulation depth"),
    "lp_cutoff": ParamMeta("noise", "float", (0.05, 2.0), doc="gain modulation cutoff, Hz"),
    "movement_enabled": ParamMeta("movement", "bool"),
    "movement_intensity": ParamMeta("movement", "float", (1.0, 2.0)),
    "movement_rate_per_min": ParamMeta("movement", "float", (5.0, 15.0)),
    "movement_duration_range": ParamMeta("movement", "pair", (0.1, 0.5)),
    "movement_band": ParamMeta("movement", "pair", (10.0, 300.0)),
    "movement_thump_prob": ParamMeta("movement", "float", (0.2, 0.5)),
    "uc_enabled": ParamMeta("uterine", "bool"),
    "uc_rate_per_10min": ParamMeta("uterine", "float", (2.0, 6.0)),
    "uc_duration_range": ParamMeta("uterine", "pair", (5.0, 30.0)),
    "uc_rise_fall_frac": ParamMeta("uterine", "pair", (0.30, 0.40)),
    "uc_attenuation": ParamMeta("uterine", "float", (0.3, 0.6)),
    "uc_noise_band": ParamMeta("uterine", "pair", (0.5, 20.0)),
    "uc_noise_intensity": ParamMeta("uterine", "float", (0.5, 1.0)),
    "prior": ParamMeta("sampling", "str", choices=PRIOR_KINDS),
    "a_s1_range": ParamMeta("sampling", "pair", (0.05, 3.0)),
    "a_s2_range": ParamMeta("sampling", "pair", (0.05, 3.0)),
    "tau_s1_range": ParamMeta("sampling", "pair", (0.008, 0.08)),
    "tau_s2_range": ParamMeta("sampling", "pair", (0.008, 0.08)),
    "delta_t_range": ParamMeta("sampling", "pair", (0.10, 0.35)),
    "walkers": ParamMeta("sampling", "int", (10, 128)),
    "mcmc_steps": ParamMeta("sampling", "int"),
    "mcmc_burn_in": ParamMeta("sampling", "int"),
    "stabilize_delta_t": ParamMeta("sampling", "bool"),
    "delta_t_pool": ParamMeta("sampling", "floats", doc="measured systolic intervals, s"),
    "seed": ParamMeta("run", "int"),
}

_FIELD_BY_KEY = {key: (meta.field or key) for key, meta in SCHEMA.items()}
_KEY_BY_LOWER = {key.lower(): key for key in SCHEMA}


def _parse_bool(raw: str) -> bool:
    v = raw.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"cannot parse boolean from {raw!r}")


def _parse_pair(raw: str) -> tuple[float, float]:
    parts = raw.strip().strip("()[]").replace(";", ",").split(",")
    parts = [p for p in (s.strip() for s in parts) if p]
    if len(parts) != 2:
        raise ConfigError(f"expected two comma-separated numbers, got {raw!r}")
    return (float(parts[0]), float(parts[1]))


def _parse_floats(raw: str) -> tuple:
    parts = raw.strip().strip("()[]").replace(";", ",").split(",")
    return tuple(float(p) for p in (s.strip() for s in parts) if p)


def parse_value(key: str, raw, kind: str):
    """Coerce a raw INI string (or JSON value) to the schema type."""
    try:
        if kind == "int":
            if isinstance(raw, bool):
                raise ConfigError(f"{key}: expected integer")
            return int(raw) if not isinstance(raw, str) else int(raw.strip())
        if kind == "float":
            return float(raw) if not isinstance(raw, str) else float(raw.strip())
        if kind == "bool":
            return raw if isinstance(raw, bool) else _parse_bool(str(raw))
        if kind == "str":
            return str(raw).strip()
        if kind == "pair":
            if isinstance(raw, (list, tuple)):
                if len(raw) != 2:
                    raise ConfigError(f"{key}: expected two values")
                return (float(raw[0]), float(raw[1]))
            return _parse_pair(str(raw))
        if kind == "floats":
            if isinstance(raw, (list, tuple)):
                return tuple(float(v) for v in raw)
            return _parse_floats(str(raw))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{key}: cannot parse {raw!r} as {kind}") from exc
    raise ConfigError(f"unknown schema kind {kind!r} for {key}")


def format_value(value, kind: str) -> str:
    if kind == "bool":
        return "true" if value else "false"
    if kind == "pair":
        return f"({value[0]!r}, {value[1]!r})"
    if kind == "floats":
        return ", ".join(repr(float(v)) for v in value)
    if kind == "float":
        return repr(float(value))
    return str(value)


def resolve_key(name: str) -> str:
    key = _KEY_BY_LOWER.get(name.lower())
    if key is None:
        raise ConfigError(f"unknown configuration key {name!r}")
    return key


def _out_of_suggested(key: str, meta: ParamMeta, value) -> str | None:
    if meta.suggested is None or meta.kind == "bool":
        return None
    lo, hi = meta.suggested
    vals = value if meta.kind == "pair" else (value,)
    for v in vals:
        if v < lo or v > hi:
            return (f"{key}={format_value(value, meta.kind)} outside the suggested "
                    f"range ({lo:g}, {hi:g})")
    return None


def range_check(cfg: SimConfig, strict: bool = False) -> list[str]:
    """Warn (error in strict mode) on values outside suggested ranges."""
    messages = []
    for key, meta in SCHEMA.items():
        msg = _out_of_suggested(key, meta, getattr(cfg, _FIELD_BY_KEY[key]))
        if msg:
            messages.append(msg)
    for msg in messages:
        if strict:
            raise ConfigError(f"strict mode: {msg}")
        warnings.warn(msg, ConfigWarning, stacklevel=2)
    return messages


def validate_hard(cfg: SimConfig) -> None:
    """Invariants whose violation breaks synthesis, independent of strictness."""
    if cfg.num_samples < 1 or cfg.cycles_per_sample < 1:
        raise ConfigError("num_samples and cycles_per_sample must be >= 1")
    if cfg.fs <= 0:
        raise ConfigError("fs must be > 0")
    f0_max = max(cfg.f0_s1, cfg.f0_s2, cfg.m_f0_s1, cfg.m_f0_s2)
    if cfg.fs < 4.0 * f0_max:
        raise ConfigError(f"fs={cfg.fs} Hz too low for carriers up to {f0_max} Hz "
                          f"(need fs >= {4.0 * f0_max} Hz)")
    if not 0 < cfg.fhr:
        raise ConfigError("fhr must be > 0")
    if cfg.rr_mode not in RR_MODES:
        raise ConfigError(f"rr_mode must be one of {RR_MODES}")
    if cfg.prior not in PRIOR_KINDS:
        raise ConfigError(f"prior must be one of {PRIOR_KINDS}")
    if not abs(cfg.rho) < 1:
        raise ConfigError("|rho| must be < 1")
    for key in ("a_s1_range", "a_s2_range", "tau_s1_range", "tau_s2_range", "delta_t_range",
                "movement_duration_range", "uc_duration_range"):
        lo, hi = getattr(cfg, key)
        if not lo < hi:
            raise ConfigError(f"{key} must be ascending, got ({lo}, {hi})")
    if cfg.delta_t_range[1] >= 60.0 / cfg.fhr:
        raise ConfigError(
            f"delta_t_range upper edge {cfg.delta_t_range[1]} s must stay below the "
            f"fetal RR {60.0 / cfg.fhr:.3f} s"
        )
    if cfg.m_delta_t >= 60.0 / cfg.mhr:
        raise ConfigError("m_delta_t must stay below the maternal RR")
    if cfg.rr_mode == "explicit" and len(cfg.rr_values) != cfg.cycles_per_sample:
        raise ConfigError("explicit rr_values must provide one interval per cycle")
    # build the typed sub-configs so their own validators run at load time
    cfg.transmission(), cfg.noise(), cfg.movement(), cfg.uterine()
    cfg.hrv(), cfg.maternal(), cfg.theta_bounds(), cfg.prior_spec()


def apply_overrides(cfg: SimConfig, overrides: dict, strict: bool = False) -> SimConfig:
    """New SimConfig with key=value overrides applied (keys verbatim or any case)."""
    values = {f.name: getattr(cfg, f.name) for f in fields(SimConfig)}
    for name, raw in overrides.items():
        key = resolve_key(name)
        meta = SCHEMA[key]
        value = parse_value(key, raw, meta.kind)
        if meta.choices and value not in meta.choices:
            raise ConfigError(f"{key} must be one of {meta.choices}, got {value!r}")
        if strict:
            msg = _out_of_suggested(key, meta, value)
            if msg:
                raise ConfigError(f"strict mode: {msg}")
        values[_FIELD_BY_KEY[key]] = value
    out = SimConfig(**values)
    validate_hard(out)
    return out


def _read_ini(text: str) -> dict[str, str]:
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str  # preserve key case (A1, A2)
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed INI: {exc}") from exc
    flat: dict[str, str] = {}
    for section in parser.sections():
        if section == "meta":
            continue
        for key, raw in parser.items(section):
            if key.lower() not in _KEY_BY_LOWER:
                warnings.warn(f"unknown configuration key [{section}] {key}",
                              ConfigWarning, stacklevel=3)
                continue
            canonical = resolve_key(key)
            expected = SCHEMA[canonical].section
            if section != expected:
                warnings.warn(f"key {canonical} found in [{section}], expected [{expected}]",
                              ConfigWarning, stacklevel=3)
            flat[canonical] = raw
    return flat


def _source_text(source: str | Path) -> str:
    """INI text from a path or from literal text (multi-line or empty)."""
    if isinstance(source, Path):
        if not source.is_file():
            raise ConfigError(f"config file not found: {source}")
        return source.read_text()
    if "\n" in source or not source.strip():
        return source
    if Path(source).is_file():
        return Path(source).read_text()
    if "[" in source or "=" in source:
        return source
    raise ConfigError(f"config file not found: {source}")


def load_config(source: str | Path | None = None, preset: str | None = None,
                overrides: dict | None = None, strict: bool = False) -> SimConfig:
    """Defaults -> preset fragment -> INI file/text -> explicit overrides.

    ``source`` may be a path to an INI file or INI text itself. Unknown keys
    warn; suggested-range violations warn (raise in strict mode); hard
    invariant violations always raise.
    """
    merged: dict = {}
    if preset:
        merged.update(preset_overrides(preset))
    if source is not None:
        merged.update(_read_ini(_source_text(source)))
    if overrides:
        merged.update({resolve_key(k): v for k, v in overrides.items()})
    cfg = apply_overrides(SimConfig(), merged)
    range_check(cfg, strict=strict)
    return cfg


def serialize_config(cfg: SimConfig) -> str:
    """INI text that reloads to an equal configuration."""
    by_section: dict[str, list[tuple[str, str]]] = {}
    for key, meta in SCHEMA.items():
        value = getattr(cfg, _FIELD_BY_KEY[key])
        by_section.setdefault(meta.section, []).append((key, format_value(value, meta.kind)))
    buf = io.StringIO()
    for section, items in by_section.items():
        buf.write(f"[{section}]\n")
        for key, value in items:
            buf.write(f"{key} = {value}\n")
        buf.write("\n")
    return buf.getvalue()


# ---- presets -----------------------------------------------------------

def _preset_dir():
    return resources.files("fpcgsim") / "presets"


def list_presets() -> dict[str, str]:
    """Preset name -> one-line description."""
    out = {}
    for entry in sorted(_preset_dir().iterdir(), key=lambda e: e.name):
        if entry.name.endswith(".ini"):
            parser = configparser.ConfigParser(interpolation=None)
            parser.optionxform = str
            parser.read_string(entry.read_text())
            desc = parser.get("meta", "description", fallback="")
            out[entry.name[:-4]] = desc
    return out


def preset_overrides(name: str) -> dict[str, str]:
    entry = _preset_dir() / f"{name}.ini"
    try:
        text = entry.read_text()
    except FileNotFoundError:
        raise ConfigError(f"unknown preset {name!r}; available: {sorted(list_presets())}")
    return _read_ini(text)


def _values_by_key(cfg: SimConfig) -> dict:
    out = {}
    for key in SCHEMA:
        value = getattr(cfg, _FIELD_BY_KEY[key])
        out[key] = list(value) if isinstance(value, tuple) else value
    return out


def catalog() -> dict:
    """Parameter catalog (defaults + slider bounds + resolved preset values)
    for the front end; control bounds are served, never client-side."""
    defaults = SimConfig()
    params = {}
    for key, meta in SCHEMA.items():
        value = getattr(defaults, _FIELD_BY_KEY[key])
        params[key] = {
            "section": meta.section,
            "kind": meta.kind,
            "default": list(value) if isinstance(value, tuple) else value,
            "suggested": list(meta.suggested) if meta.suggested else None,
            "choices": list(meta.choices) if meta.choices else None,
            "doc": meta.doc,
        }
    presets = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for name, description in list_presets().items():
            presets.append({
                "name": name,
                "description": description,
                "values": _values_by_key(load_config(preset=name)),
            })
    return {"presets": presets, "parameters": params}
