import { statusColor } from "./colors.js";
import type { ChannelStatus } from "./types.js";

const SPARK_HISTORY = 240; // points kept per tile; bounds memory at 512 channels
const SPARK_MAX_PA = 250;

interface Tile {
  root: HTMLElement;
  canvas: HTMLCanvasElement;
  status: ChannelStatus;
  history: number[];
}

export interface StatusCounts {
  dead: number;
  capture: number;
  translocating: number;
}

/**
 * The 512-channel grid of miniature plots. Pure view: statuses and signal
 * snippets come exclusively from protocol payloads.
 */
export class ChannelGrid {
  private tiles = new Map<number, Tile>();

  constructor(
    private root: HTMLElement,
    channels: number[],
    onSelect: (channel: number) => void,
  ) {
    root.classList.add("channel-grid");
    root.textContent = "";
    for (const channel of channels) {
      const tile = document.createElement("div");
      tile.className = "tile";
      tile.dataset.channel = String(channel);
      tile.title = `channel ${channel}`;
      const canvas = document.createElement("canvas");
      canvas.width = 56;
      canvas.height = 24;
      tile.appendChild(canvas);
      tile.addEventListener("click", () => onSelect(channel));
      root.appendChild(tile);
      const entry: Tile = { root: tile, canvas, status: "active", history: [] };
      this.tiles.set(channel, entry);
      this.paint(entry);
    }
  }

  channels(): number[] {
    return [...this.tiles.keys()];
  }

  setStatus(channel: number, status: ChannelStatus): void {
    const tile = this.tiles.get(channel);
    if (!tile) return;
    tile.status = status;
    this.paint(tile);
  }

  statusOf(channel: number): ChannelStatus | undefined {
    return this.tiles.get(channel)?.status;
  }

  pushSignal(channel: number, values: number[]): void {
    const tile = this.tiles.get(channel);
    if (!tile) return;
    tile.history.push(...values);
    if (tile.history.length > SPARK_HISTORY) {
      tile.history.splice(0, tile.history.length - SPARK_HISTORY);
    }
    this.drawSparkline(tile);
  }

  historyLength(channel: number): number {
    return this.tiles.get(channel)?.history.length ?? 0;
  }

  setConnected(connected: boolean): void {
    this.root.classList.toggle("disconnected", !connected);
  }

  counts(): StatusCounts {
    const counts: StatusCounts = { dead: 0, capture: 0, translocating: 0 };
    for (const tile of this.tiles.values()) {
      if (tile.status === "dead") counts.dead += 1;
      else if (tile.status === "capture") counts.capture += 1;
      else if (tile.status === "translocating") counts.translocating += 1;
    }
    return counts;
  }

  private paint(tile: Tile): void {
    tile.root.dataset.status = tile.status;
    tile.root.style.backgroundColor = statusColor(tile.status);
    this.drawSparkline(tile);
  }

  private drawSparkline(tile: Tile): void {
    const ctx = tile.canvas.getContext("2d");
    if (!ctx) return; // headless test environment
    const { width, height } = tile.canvas;
    ctx.clearRect(0, 0, width, height);
    const n = tile.history.length;
    if (n < 2) return;
    ctx.strokeStyle = "#1b1e24";
    ctx.lineWidth = 1;
    ctx.beginPath();
    for (let i = 0; i < n; i++) {
      const x = (i / (n - 1)) * width;
      const y = height - (Math.min(tile.history[i], SPARK_MAX_PA) / SPARK_MAX_PA) * height;
      if (i === 0) ctx.moveTo(x, y);
      else ctx.lineTo(x, y);
    }
    ctx.stroke();
  }
}
