// Pure UI state layer: control construction, request building, plot-data
// mapping. Deliberately free of synthesis constants; every bound, default,
// choice list and preset value comes from the served catalog, and every
// plotted number comes from a response.

import { Catalog, ParamSpec, PresetEntry, SynthesizeRequest, SynthesizeResponse } from "./api.js";

export const DEBOUNCE_MS = 300;

export type ControlKind = "slider" | "toggle" | "select" | "number";

export interface ControlSpec {
  key: string;
  kind: ControlKind;
  label: string;
  min: number | null;
  max: number | null;
  step: number | null;
  choices: string[] | null;
  value: unknown;
}

// Which parameters get interactive controls (a layout choice; all metadata
// about them is server-supplied).
export const CONTROL_KEYS = [
  "snr_db",
  "maternal_scale",
  "fhr",
  "prior",
  "shared_tau",
  "movement_enabled",
  "uc_enabled",
] as const;

function controlFor(key: string, spec: ParamSpec): ControlSpec {
  const base = {
    key,
    label: spec.doc || key,
    min: null as number | null,
    max: null as number | null,
    step: null as number | null,
    choices: null as string[] | null,
    value: spec.default,
  };
  if (spec.kind === "bool") {
    return { ...base, kind: "toggle" };
  }
  if (spec.choices) {
    return { ...base, kind: "select", choices: [...spec.choices] };
  }
  if (spec.suggested) {
    const [lo, hi] = spec.suggested;
    const step = spec.kind === "int" ? 1 : (hi - lo) / 100;
    return { ...base, kind: "slider", min: lo, max: hi, step };
  }
  return { ...base, kind: "number" };
}

export interface UiState {
  preset: string | null;
  controls: ControlSpec[];
  nCycles: number;
  seed: number;
  baseline: Record<string, unknown>;
}

export function initialState(catalog: Catalog): UiState {
  const controls = CONTROL_KEYS
    .filter((k) => k in catalog.parameters)
    .map((k) => controlFor(k, catalog.parameters[k]));
  return {
    preset: null,
    controls,
    nCycles: Number(catalog.parameters["cycles_per_sample"].default),
    seed: Number(catalog.parameters["seed"].default),
    baseline: Object.fromEntries(controls.map((c) => [c.key, c.value])),
  };
}

export function applyPreset(state: UiState, preset: PresetEntry | null,
                            catalog: Catalog): UiState {
  const source = (key: string): unknown =>
    preset ? preset.values[key] : catalog.parameters[key].default;
  const controls = state.controls.map((c) => ({ ...c, value: source(c.key) }));
  return {
    ...state,
    preset: preset ? preset.name : null,
    controls,
    baseline: Object.fromEntries(controls.map((c) => [c.key, c.value])),
  };
}

export function setControl(state: UiState, key: string, value: unknown): UiState {
  return {
    ...state,
    controls: state.controls.map((c) => (c.key === key ? { ...c, value } : c)),
  };
}

export function outOfRange(control: ControlSpec, value: number): boolean {
  if (control.min === null || control.max === null) {
    return false;
  }
  return value < control.min || value > control.max;
}

export function buildRequest(state: UiState): SynthesizeRequest {
  const overrides: Record<string, unknown> = {};
  for (const control of state.controls) {
    if (control.value !== state.baseline[control.key]) {
      overrides[control.key] = control.value;
    }
  }
  return {
    preset: state.preset,
    overrides,
    n_cycles: state.nCycles,
    seed: state.seed,
  };
}

export interface Series {
  x: number[];
  y: number[];
  band?: number[];
}

export interface PlotData {
  waveform: Series;
  envelope: Series;
  acf: Series;
  psd: Series;
  truncated: boolean;
  fs: number;
}

export function plotData(resp: SynthesizeResponse): PlotData {
  const times = resp.mixture.map((_, i) => i / resp.fs);
  let peak = 0;
  for (const v of resp.mixture) {
    const a = Math.abs(v);
    if (a > peak) {
      peak = a;
    }
  }
  const scale = peak > 0 ? peak : 1;
  return {
    waveform: { x: times, y: resp.mixture },
    envelope: { x: times, y: resp.envelope.map((v) => v * scale) },
    acf: { x: resp.acf.lag, y: resp.acf.value },
    psd: { x: resp.psd.freq, y: resp.psd.db, band: resp.psd.db_std },
    truncated: resp.truncated,
    fs: resp.fs,
  };
}

// Serialize deterministically so identical UI state yields byte-identical
// request bodies (stale-response comparison relies on it).
export function requestKey(request: SynthesizeRequest): string {
  const overrides = Object.fromEntries(
    Object.keys(request.overrides).sort().map((k) => [k, request.overrides[k]]));
  return JSON.stringify({ ...request, overrides });
}

export class RequestSequencer {
  private counter = 0;

  next(): number {
    this.counter += 1;
    return this.counter;
  }

  isCurrent(token: number): boolean {
    return token === this.counter;
  }
}

export function debounced(fn: () => void, ms: number = DEBOUNCE_MS): () => void {
  let handle: ReturnType<typeof setTimeout> | null = null;
  return () => {
    if (handle !== null) {
      clearTimeout(handle);
    }
    handle = setTimeout(fn, ms);
  };
}
