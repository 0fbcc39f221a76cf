// Canvas line plots: axes, min-max decimated traces, optional error band,
// and wheel-zoom / drag-pan on the time axis for the waveform panel.

import { Series } from "./state.js";

const MARGIN = { left: 52, right: 12, top: 10, bottom: 26 };
const AXIS_COLOR = "#8a8f98";
const GRID_COLOR = "#2a2e35";
const LABEL_FONT = "11px system-ui, sans-serif";

export interface Trace {
  series: Series;
  color: string;
  width?: number;
  label?: string;
}

interface ViewWindow {
  x0: number;
  x1: number;
}

export class LinePlot {
  private ctx: CanvasRenderingContext2D;
  private traces: Trace[] = [];
  private view: ViewWindow | null = null;
  private full: ViewWindow = { x0: 0, x1: 1 };
  private dragging = false;
  private dragStartX = 0;
  private dragStartView: ViewWindow = { x0: 0, x1: 1 };

  constructor(private canvas: HTMLCanvasElement,
              private xLabel: string,
              private yLabel: string,
              interactive = false) {
    const ctx = canvas.getContext("2d");
    if (!ctx) {
      throw new Error("canvas 2d context unavailable");
    }
    this.ctx = ctx;
    if (interactive) {
      this.bindInteraction();
    }
  }

  setTraces(traces: Trace[]): void {
    this.traces = traces;
    const xs = traces.flatMap((t) => (t.series.x.length ? [t.series.x[0], t.series.x[t.series.x.length - 1]] : []));
    if (xs.length) {
      this.full = { x0: Math.min(...xs), x1: Math.max(...xs) };
    }
    this.view = null;
    this.draw();
  }

  resetView(): void {
    this.view = null;
    this.draw();
  }

  private bindInteraction(): void {
    this.canvas.addEventListener("wheel", (ev) => {
      ev.preventDefault();
      const { x0, x1 } = this.view ?? this.full;
      const frac = (ev.offsetX - MARGIN.left) / this.plotWidth();
      const center = x0 + Math.min(Math.max(frac, 0), 1) * (x1 - x0);
      const factor = ev.deltaY > 0 ? 1.25 : 0.8;
      const half0 = (center - x0) * factor;
      const half1 = (x1 - center) * factor;
      const nx0 = Math.max(this.full.x0, center - half0);
      const nx1 = Math.min(this.full.x1, center + half1);
      this.view = nx1 - nx0 > 1e-6 ? { x0: nx0, x1: nx1 } : this.view;
      this.draw();
    }, { passive: false });
    this.canvas.addEventListener("pointerdown", (ev) => {
      this.dragging = true;
      this.dragStartX = ev.offsetX;
      this.dragStartView = this.view ?? this.full;
      this.canvas.setPointerCapture(ev.pointerId);
    });
    this.canvas.addEventListener("pointermove", (ev) => {
      if (!this.dragging) {
        return;
      }
      const span = this.dragStartView.x1 - this.dragStartView.x0;
      const shift = ((this.dragStartX - ev.offsetX) / this.plotWidth()) * span;
      let x0 = this.dragStartView.x0 + shift;
      let x1 = this.dragStartView.x1 + shift;
      if (x0 < this.full.x0) {
        x1 += this.full.x0 - x0;
        x0 = this.full.x0;
      }
      if (x1 > this.full.x1) {
        x0 -= x1 - this.full.x1;
        x1 = this.full.x1;
      }
      this.view = { x0, x1 };
      this.draw();
    });
    this.canvas.addEventListener("pointerup", () => {
      this.dragging = false;
    });
    this.canvas.addEventListener("dblclick", () => this.resetView());
  }

  private plotWidth(): number {
    return this.canvas.width - MARGIN.left - MARGIN.right;
  }

  private plotHeight(): number {
    return this.canvas.height - MARGIN.top - MARGIN.bottom;
  }

  draw(): void {
    const { ctx } = this;
    ctx.clearRect(0, 0, this.canvas.width, this.canvas.height);
    if (!this.traces.length || !this.traces[0].series.x.length) {
      return;
    }
    const view = this.view ?? this.full;
    let yMin = Infinity;
    let yMax = -Infinity;
    const windows = this.traces.map((t) => windowSeries(t.series, view));
    for (const w of windows) {
      for (const v of w.y) {
        if (v < yMin) { yMin = v; }
        if (v > yMax) { yMax = v; }
      }
      if (w.band) {
        for (let i = 0; i < w.y.length; i++) {
          if (w.y[i] - w.band[i] < yMin) { yMin = w.y[i] - w.band[i]; }
          if (w.y[i] + w.band[i] > yMax) { yMax = w.y[i] + w.band[i]; }
        }
      }
    }
    if (!isFinite(yMin) || !isFinite(yMax)) {
      return;
    }
    if (yMax === yMin) {
      yMax += 1;
      yMin -= 1;
    }
    const pad = 0.05 * (yMax - yMin);
    yMin -= pad;
    yMax += pad;

    const sx = (x: number) =>
      MARGIN.left + ((x - view.x0) / (view.x1 - view.x0)) * this.plotWidth();
    const sy = (y: number) =>
      MARGIN.top + (1 - (y - yMin) / (yMax - yMin)) * this.plotHeight();

    this.drawAxes(view, yMin, yMax, sx, sy);

    for (let t = 0; t < this.traces.length; t++) {
      const trace = this.traces[t];
      const w = windows[t];
      const dec = minMaxDecimate(w.x, w.y, this.plotWidth());
      if (w.band) {
        ctx.beginPath();
        const decHi = minMaxDecimate(w.x, w.y.map((v, i) => v + w.band![i]), this.plotWidth());
        const decLo = minMaxDecimate(w.x, w.y.map((v, i) => v - w.band![i]), this.plotWidth());
        for (let i = 0; i < decHi.x.length; i++) {
          const px = sx(decHi.x[i]);
          i === 0 ? ctx.moveTo(px, sy(decHi.yMax[i])) : ctx.lineTo(px, sy(decHi.yMax[i]));
        }
        for (let i = decLo.x.length - 1; i >= 0; i--) {
          ctx.lineTo(sx(decLo.x[i]), sy(decLo.yMin[i]));
        }
        ctx.closePath();
        ctx.fillStyle = trace.color + "33";
        ctx.fill();
      }
      ctx.beginPath();
      ctx.strokeStyle = trace.color;
      ctx.lineWidth = trace.width ?? 1;
      for (let i = 0; i < dec.x.length; i++) {
        const px = sx(dec.x[i]);
        if (i === 0) {
          ctx.moveTo(px, sy(dec.yMin[i]));
        }
        ctx.lineTo(px, sy(dec.yMin[i]));
        if (dec.yMax[i] !== dec.yMin[i]) {
          ctx.lineTo(px, sy(dec.yMax[i]));
        }
      }
      ctx.stroke();
    }
    this.drawLegend();
  }

  private drawAxes(view: ViewWindow, yMin: number, yMax: number,
                   sx: (x: number) => number, sy: (y: number) => number): void {
    const { ctx } = this;
    ctx.strokeStyle = AXIS_COLOR;
    ctx.fillStyle = AXIS_COLOR;
    ctx.font = LABEL_FONT;
    ctx.lineWidth = 1;
    ctx.strokeRect(MARGIN.left, MARGIN.top, this.plotWidth(), this.plotHeight());

    for (const tx of ticks(view.x0, view.x1, 6)) {
      const px = sx(tx);
      ctx.strokeStyle = GRID_COLOR;
      ctx.beginPath();
      ctx.moveTo(px, MARGIN.top);
      ctx.lineTo(px, MARGIN.top + this.plotHeight());
      ctx.stroke();
      ctx.fillText(fmt(tx), px - 10, this.canvas.height - 8);
    }
    for (const ty of ticks(yMin, yMax, 5)) {
      const py = sy(ty);
      ctx.strokeStyle = GRID_COLOR;
      ctx.beginPath();
      ctx.moveTo(MARGIN.left, py);
      ctx.lineTo(MARGIN.left + this.plotWidth(), py);
      ctx.stroke();
      ctx.fillText(fmt(ty), 4, py + 3);
    }
    ctx.fillStyle = AXIS_COLOR;
    ctx.fillText(this.xLabel, this.canvas.width - MARGIN.right - 8 * this.xLabel.length, this.canvas.height - 8);
    ctx.fillText(this.yLabel, 4, MARGIN.top + 4);
  }

  private drawLegend(): void {
    const { ctx } = this;
    let x = MARGIN.left + 8;
    ctx.font = LABEL_FONT;
    for (const trace of this.traces) {
      if (!trace.label) {
        continue;
      }
      ctx.fillStyle = trace.color;
      ctx.fillRect(x, MARGIN.top + 6, 10, 3);
      ctx.fillStyle = AXIS_COLOR;
      ctx.fillText(trace.label, x + 14, MARGIN.top + 11);
      x += 14 + 7 * trace.label.length + 12;
    }
  }
}

function windowSeries(series: Series, view: ViewWindow):
    { x: number[]; y: number[]; band: number[] | null } {
  const x: number[] = [];
  const y: number[] = [];
  const band: number[] = [];
  for (let i = 0; i < series.x.length; i++) {
    if (series.x[i] >= view.x0 && series.x[i] <= view.x1) {
      x.push(series.x[i]);
      y.push(series.y[i]);
      if (series.band) {
        band.push(series.band[i]);
      }
    }
  }
  return { x, y, band: series.band ? band : null };
}

export function minMaxDecimate(x: number[], y: number[], buckets: number):
    { x: number[]; yMin: number[]; yMax: number[] } {
  const n = x.length;
  if (n <= buckets) {
    return { x: [...x], yMin: [...y], yMax: [...y] };
  }
  const outX: number[] = [];
  const outMin: number[] = [];
  const outMax: number[] = [];
  const per = n / buckets;
  for (let b = 0; b < buckets; b++) {
    const lo = Math.floor(b * per);
    const hi = Math.min(Math.floor((b + 1) * per), n);
    if (lo >= hi) {
      continue;
    }
    let mn = y[lo];
    let mx = y[lo];
    for (let i = lo + 1; i < hi; i++) {
      if (y[i] < mn) { mn = y[i]; }
      if (y[i] > mx) { mx = y[i]; }
    }
    outX.push(x[lo + ((hi - lo) >> 1)]);
    outMin.push(mn);
    outMax.push(mx);
  }
  return { x: outX, yMin: outMin, yMax: outMax };
}

function ticks(lo: number, hi: number, count: number): number[] {
  const span = hi - lo;
  if (span <= 0) {
    return [lo];
  }
  const step = niceStep(span / count);
  const first = Math.ceil(lo / step) * step;
  const out: number[] = [];
  for (let v = first; v <= hi; v += step) {
    out.push(v);
  }
  return out;
}

function niceStep(raw: number): number {
  const mag = Math.pow(10, Math.floor(Math.log10(raw)));
  const norm = raw / mag;
  if (norm < 1.5) { return mag; }
  if (norm < 3.5) { return 2 * mag; }
  if (norm < 7.5) { return 5 * mag; }
  return 10 * mag;
}

function fmt(v: number): string {
  if (v === 0) { return "0"; }
  const a = Math.abs(v);
  if (a >= 1000 || a < 0.01) { return v.toExponential(1); }
  if (a >= 100) { return v.toFixed(0); }
  if (a >= 1) { return v.toFixed(2); }
  return v.toFixed(3);
}
