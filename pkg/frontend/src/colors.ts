import type { ChannelStatus } from "./types.js";

// Tile colors map 1:1 to protocol statuses: blue for detected captures,
// dark red for dead pores, light green reserved for translocation events,
// neutral grey for active channels.
export const STATUS_COLORS: Record<ChannelStatus, string> = {
  capture: "#2f6fd6",
  dead: "#8b1a1a",
  translocating: "#8fd694",
  active: "#d7dbe0",
};

export function statusColor(status: ChannelStatus): string {
  return STATUS_COLORS[status];
}

// Purple-to-gold ramp for per-window capture likelihood.
const LOW = { r: 0x44, g: 0x0d, b: 0x67 };
const HIGH = { r: 0xf5, g: 0xc4, b: 0x2c };

export function likelihoodColor(p: number): string {
  const t = Math.min(1, Math.max(0, p));
  const r = Math.round(LOW.r + (HIGH.r - LOW.r) * t);
  const g = Math.round(LOW.g + (HIGH.g - LOW.g) * t);
  const b = Math.round(LOW.b + (HIGH.b - LOW.b) * t);
  return `rgb(${r}, ${g}, ${b})`;
}
