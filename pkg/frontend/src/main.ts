// DOM wiring: preset panel, parameter controls, debounced synthesis, plots.

import { ApiClient, ApiError, Catalog, PresetEntry, SynthesizeResponse } from "./api.js";
import { LinePlot } from "./plots.js";
import {
  ControlSpec, RequestSequencer, UiState, applyPreset, buildRequest, debounced,
  initialState, outOfRange, plotData, setControl,
} from "./state.js";

const api = new ApiClient("");
const sequencer = new RequestSequencer();

let catalog: Catalog;
let state: UiState;
let lastResponse: SynthesizeResponse | null = null;
let downloadUrl: string | null = null;

const el = {
  banner: byId<HTMLDivElement>("banner"),
  presets: byId<HTMLSelectElement>("preset-select"),
  presetDesc: byId<HTMLParagraphElement>("preset-description"),
  controls: byId<HTMLDivElement>("controls"),
  nCycles: byId<HTMLInputElement>("n-cycles"),
  seed: byId<HTMLInputElement>("seed"),
  status: byId<HTMLSpanElement>("status"),
  download: byId<HTMLAnchorElement>("download"),
  truncatedNote: byId<HTMLDivElement>("truncated-note"),
};

const plots = {
  waveform: new LinePlot(byId("plot-waveform"), "time (s)", "amplitude", true),
  acf: new LinePlot(byId("plot-acf"), "lag (s)", "ACF"),
  psd: new LinePlot(byId("plot-psd"), "frequency (Hz)", "PSD (dB)"),
};

function byId<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) {
    throw new Error(`missing element #${id}`);
  }
  return node as T;
}

function showBanner(message: string, retry: boolean): void {
  el.banner.textContent = message;
  el.banner.classList.remove("hidden");
  if (retry) {
    const button = document.createElement("button");
    button.textContent = "retry";
    button.addEventListener("click", () => {
      el.banner.classList.add("hidden");
      void boot();
    });
    el.banner.appendChild(button);
  }
}

function renderPresetOptions(): void {
  el.presets.innerHTML = "";
  const blank = document.createElement("option");
  blank.value = "";
  blank.textContent = "(defaults)";
  el.presets.appendChild(blank);
  for (const preset of catalog.presets) {
    const option = document.createElement("option");
    option.value = preset.name;
    option.textContent = preset.name;
    el.presets.appendChild(option);
  }
}

function controlInput(control: ControlSpec): HTMLElement {
  const wrap = document.createElement("div");
  wrap.className = "control";
  const label = document.createElement("label");
  label.textContent = `${control.key}`;
  label.title = control.label;
  wrap.appendChild(label);

  const errorNote = document.createElement("span");
  errorNote.className = "field-error hidden";

  if (control.kind === "toggle") {
    const input = document.createElement("input");
    input.type = "checkbox";
    input.checked = Boolean(control.value);
    input.addEventListener("change", () => {
      state = setControl(state, control.key, input.checked);
      scheduleSynthesis();
    });
    wrap.appendChild(input);
  } else if (control.kind === "select") {
    const select = document.createElement("select");
    for (const choice of control.choices ?? []) {
      const option = document.createElement("option");
      option.value = choice;
      option.textContent = choice;
      select.appendChild(option);
    }
    select.value = String(control.value);
    select.addEventListener("change", () => {
      state = setControl(state, control.key, select.value);
      scheduleSynthesis();
    });
    wrap.appendChild(select);
  } else {
    const input = document.createElement("input");
    const readout = document.createElement("span");
    readout.className = "readout";
    if (control.kind === "slider" && control.min !== null && control.max !== null) {
      input.type = "range";
      input.min = String(control.min);
      input.max = String(control.max);
      input.step = String(control.step ?? "any");
    } else {
      input.type = "number";
    }
    input.value = String(control.value);
    readout.textContent = String(control.value);
    input.addEventListener("input", () => {
      const value = Number(input.value);
      readout.textContent = input.value;
      if (Number.isFinite(value) && outOfRange(control, value)) {
        errorNote.textContent = `outside served range [${control.min}, ${control.max}]`;
        errorNote.classList.remove("hidden");
        return;
      }
      errorNote.classList.add("hidden");
      state = setControl(state, control.key, value);
      scheduleSynthesis();
    });
    wrap.appendChild(input);
    wrap.appendChild(readout);
  }
  wrap.appendChild(errorNote);
  wrap.dataset.key = control.key;
  return wrap;
}

function renderControls(): void {
  el.controls.innerHTML = "";
  for (const control of state.controls) {
    el.controls.appendChild(controlInput(control));
  }
  el.nCycles.value = String(state.nCycles);
  el.seed.value = String(state.seed);
}

function markFieldError(field: string | null, message: string): void {
  el.status.textContent = message;
  if (!field) {
    return;
  }
  const node = el.controls.querySelector(`[data-key="${field}"] .field-error`);
  if (node) {
    node.textContent = message;
    node.classList.remove("hidden");
  }
}

async function synthesize(): Promise<void> {
  const token = sequencer.next();
  el.status.textContent = "synthesizing...";
  try {
    const response = await api.synthesize(buildRequest(state));
    if (!sequencer.isCurrent(token)) {
      return; // stale response, a newer request is in flight
    }
    lastResponse = response;
    render(response);
    el.status.textContent = `seed ${response.seed}, ${response.mixture.length} samples`;
  } catch (err) {
    if (!sequencer.isCurrent(token)) {
      return;
    }
    if (err instanceof ApiError && err.fieldError) {
      markFieldError(err.fieldError.field, err.fieldError.message);
    } else {
      showBanner(`synthesis failed: ${(err as Error).message}`, true);
    }
  }
}

const scheduleSynthesis = debounced(() => void synthesize());

function render(response: SynthesizeResponse): void {
  const data = plotData(response);
  plots.waveform.setTraces([
    { series: data.waveform, color: "#5ea1ff", label: "mixture" },
    { series: data.envelope, color: "#ffb454", width: 2, label: "envelope" },
  ]);
  plots.acf.setTraces([{ series: data.acf, color: "#6fd18b", label: "cycle-averaged ACF" }]);
  plots.psd.setTraces([{ series: data.psd, color: "#d68fff", label: "Welch PSD" }]);
  el.truncatedNote.classList.toggle("hidden", !data.truncated);
  if (downloadUrl) {
    URL.revokeObjectURL(downloadUrl);
  }
  downloadUrl = URL.createObjectURL(
    new Blob([JSON.stringify(response)], { type: "application/json" }));
  el.download.href = downloadUrl;
  el.download.download = `fpcg_seed${response.seed}.json`;
}

async function boot(): Promise<void> {
  try {
    catalog = await api.presets();
  } catch (err) {
    showBanner(`API unreachable: ${(err as Error).message}`, true);
    return;
  }
  state = initialState(catalog);
  renderPresetOptions();
  renderControls();

  el.presets.addEventListener("change", () => {
    const preset: PresetEntry | null =
      catalog.presets.find((p) => p.name === el.presets.value) ?? null;
    el.presetDesc.textContent = preset ? preset.description : "";
    state = applyPreset(state, preset, catalog);
    renderControls();
    scheduleSynthesis();
  });
  el.nCycles.addEventListener("input", () => {
    const v = Number(el.nCycles.value);
    if (Number.isFinite(v) && v >= 1) {
      state = { ...state, nCycles: Math.round(v) };
      scheduleSynthesis();
    }
  });
  el.seed.addEventListener("input", () => {
    const v = Number(el.seed.value);
    if (Number.isFinite(v)) {
      state = { ...state, seed: Math.round(v) };
      scheduleSynthesis();
    }
  });

  await synthesize();
}

void boot();
export { lastResponse };
