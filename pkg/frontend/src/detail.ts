import { likelihoodColor, statusColor } from "./colors.js";
import type { SignalResponse } from "./types.js";

export interface DetailCallbacks {
  onThreshold: (value: number) => void;
  onExport: () => void;
}

/**
 * Large per-channel view: decimated signal with shaded capture regions and
 * confidence labels, the per-window likelihood strip, Y-axis range control,
 * and the live threshold slider. Regions are rendered as positioned overlay
 * elements derived byte-for-byte from the protocol payload.
 */
export class DetailView {
  readonly root: HTMLElement;
  private canvas: HTMLCanvasElement;
  private strip: HTMLCanvasElement;
  private overlay: HTMLElement;
  private title: HTMLElement;
  private slider: HTMLInputElement;
  private sliderLabel: HTMLElement;
  private yMinInput: HTMLInputElement;
  private yMaxInput: HTMLInputElement;
  private payload: SignalResponse | null = null;

  constructor(parent: HTMLElement, private callbacks: DetailCallbacks) {
    this.root = document.createElement("section");
    this.root.className = "detail-view";
    this.root.innerHTML = `
      <header>
        <h2 class="detail-title">no channel selected</h2>
        <div class="detail-controls">
          <label>Y min <input class="y-min" type="number" value="0"></label>
          <label>Y max <input class="y-max" type="number" value="250"></label>
          <label>threshold
            <input class="threshold-slider" type="range" min="0.05" max="0.95"
                   step="0.001" value="0.524">
            <span class="threshold-value">0.524</span>
          </label>
          <button class="export-btn" type="button">export JSON</button>
        </div>
      </header>
      <div class="plot-wrap">
        <canvas class="signal-plot" width="900" height="260"></canvas>
        <div class="region-overlay"></div>
      </div>
      <canvas class="likelihood-strip" width="900" height="18"></canvas>
    `;
    parent.appendChild(this.root);
    this.canvas = this.root.querySelector(".signal-plot") as HTMLCanvasElement;
    this.strip = this.root.querySelector(".likelihood-strip") as HTMLCanvasElement;
    this.overlay = this.root.querySelector(".region-overlay") as HTMLElement;
    this.title = this.root.querySelector(".detail-title") as HTMLElement;
    this.slider = this.root.querySelector(".threshold-slider") as HTMLInputElement;
    this.sliderLabel = this.root.querySelector(".threshold-value") as HTMLElement;
    this.yMinInput = this.root.querySelector(".y-min") as HTMLInputElement;
    this.yMaxInput = this.root.querySelector(".y-max") as HTMLInputElement;

    this.slider.addEventListener("change", () => {
      const value = Number(this.slider.value);
      this.sliderLabel.textContent = value.toFixed(3);
      this.callbacks.onThreshold(value);
    });
    this.slider.addEventListener("input", () => {
      this.sliderLabel.textContent = Number(this.slider.value).toFixed(3);
    });
    const redraw = () => this.redraw();
    this.yMinInput.addEventListener("change", redraw);
    this.yMaxInput.addEventListener("change", redraw);
    (this.root.querySelector(".export-btn") as HTMLButtonElement).addEventListener(
      "click", () => this.callbacks.onExport(),
    );
  }

  show(payload: SignalResponse): void {
    this.payload = payload;
    this.title.textContent =
      `channel ${payload.channel} — ${payload.status}`;
    this.title.style.color = statusColor(payload.status);
    this.slider.value = String(payload.threshold);
    this.sliderLabel.textContent = payload.threshold.toFixed(3);
    this.redraw();
  }

  get yRange(): [number, number] {
    const lo = Number(this.yMinInput.value);
    const hi = Number(this.yMaxInput.value);
    return hi > lo ? [lo, hi] : [0, 250];
  }

  /** Regions currently shaded, as read back from the DOM overlay. */
  renderedRegions(): { start_raw: number; end_raw: number; confidence: number }[] {
    return [...this.overlay.querySelectorAll(".region")].map((el) => ({
      start_raw: Number((el as HTMLElement).dataset.startRaw),
      end_raw: Number((el as HTMLElement).dataset.endRaw),
      confidence: Number((el as HTMLElement).dataset.confidence),
    }));
  }

  private redraw(): void {
    const payload = this.payload;
    if (!payload) return;
    this.drawSignal(payload);
    this.drawLikelihoodStrip(payload);
    this.placeRegions(payload);
  }

  private span(payload: SignalResponse): [number, number] {
    const idx = payload.indices;
    if (idx.length === 0) return [0, 1];
    return [idx[0], Math.max(idx[idx.length - 1], idx[0] + 1)];
  }

  private drawSignal(payload: SignalResponse): void {
    const ctx = this.canvas.getContext("2d");
    if (!ctx) return;
    const { width, height } = this.canvas;
    const [lo, hi] = this.yRange;
    const [dsLo, dsHi] = this.span(payload);
    ctx.clearRect(0, 0, width, height);
    ctx.strokeStyle = "#20242c";
    ctx.lineWidth = 1;
    ctx.beginPath();
    payload.indices.forEach((dsIdx, i) => {
      const x = ((dsIdx - dsLo) / (dsHi - dsLo)) * width;
      const v = Math.min(Math.max(payload.values[i], lo), hi);
      const y = height - ((v - lo) / (hi - lo)) * height;
      if (i === 0) ctx.moveTo(x, y);
      else ctx.lineTo(x, y);
    });
    ctx.stroke();
  }

  private drawLikelihoodStrip(payload: SignalResponse): void {
    const ctx = this.strip.getContext("2d");
    if (!ctx) return;
    const { width, height } = this.strip;
    const [dsLo, dsHi] = this.span(payload);
    ctx.clearRect(0, 0, width, height);
    for (const w of payload.windows) {
      const x0 = ((w.ds_start - dsLo) / (dsHi - dsLo)) * width;
      const x1 = ((w.ds_end - dsLo) / (dsHi - dsLo)) * width;
      ctx.fillStyle = likelihoodColor(w.probability);
      ctx.fillRect(x0, 0, Math.max(1, x1 - x0), height);
    }
  }

  private placeRegions(payload: SignalResponse): void {
    this.overlay.textContent = "";
    const [dsLo, dsHi] = this.span(payload);
    const f = payload.downsample_factor;
    for (const region of payload.regions) {
      const el = document.createElement("div");
      el.className = "region";
      el.dataset.startRaw = String(region.start_raw);
      el.dataset.endRaw = String(region.end_raw);
      el.dataset.confidence = String(region.confidence);
      const left = ((region.start_raw / f - dsLo) / (dsHi - dsLo)) * 100;
      const right = ((region.end_raw / f - dsLo) / (dsHi - dsLo)) * 100;
      el.style.left = `${Math.max(0, left)}%`;
      el.style.width = `${Math.max(0.2, Math.min(100, right) - Math.max(0, left))}%`;
      const label = document.createElement("span");
      label.className = "region-confidence";
      label.textContent = region.confidence.toFixed(2);
      el.appendChild(label);
      this.overlay.appendChild(el);
    }
  }
}
