import { beforeEach, describe, expect, it } from "vitest";

import { ChannelGrid } from "../src/grid.js";
import { statusColor } from "../src/colors.js";

function makeGrid(n = 512) {
  const root = document.createElement("div");
  document.body.appendChild(root);
  const selections: number[] = [];
  const grid = new ChannelGrid(
    root,
    Array.from({ length: n }, (_, i) => i + 1),
    (ch) => selections.push(ch),
  );
  return { root, grid, selections };
}

describe("channel grid", () => {
  beforeEach(() => {
    document.body.innerHTML = "";
  });

  it("renders 512 tiles", () => {
    const { root } = makeGrid(512);
    expect(root.querySelectorAll(".tile")).toHaveLength(512);
  });

  it("recolors a tile when its status changes", () => {
    const { root, grid } = makeGrid(16);
    grid.setStatus(7, "dead");
    const tile = root.querySelector('[data-channel="7"]') as HTMLElement;
    expect(tile.dataset.status).toBe("dead");
    expect(tile.style.backgroundColor).toBe(statusColor("dead"));
    grid.setStatus(7, "capture");
    expect(tile.dataset.status).toBe("capture");
  });

  it("applies a status event within one second", () => {
    const { grid } = makeGrid(8);
    const t0 = performance.now();
    grid.setStatus(3, "capture");
    expect(performance.now() - t0).toBeLessThan(1000);
    expect(grid.statusOf(3)).toBe("capture");
  });

  it("counts dead and capture-active channels for the header", () => {
    const { grid } = makeGrid(10);
    grid.setStatus(1, "dead");
    grid.setStatus(2, "dead");
    grid.setStatus(3, "capture");
    expect(grid.counts()).toEqual({ dead: 2, capture: 1, translocating: 0 });
  });

  it("keeps per-channel history bounded", () => {
    const { grid } = makeGrid(2);
    for (let i = 0; i < 50; i++) {
      grid.pushSignal(1, Array.from({ length: 64 }, () => 180));
    }
    expect(grid.historyLength(1)).toBeLessThanOrEqual(240);
  });

  it("clicking a tile selects its channel", () => {
    const { root, selections } = makeGrid(4);
    (root.querySelector('[data-channel="2"]') as HTMLElement).click();
    expect(selections).toEqual([2]);
  });

  it("greys out on disconnect and recovers", () => {
    const { root, grid } = makeGrid(4);
    grid.setConnected(false);
    expect(root.classList.contains("disconnected")).toBe(true);
    grid.setConnected(true);
    expect(root.classList.contains("disconnected")).toBe(false);
  });
});
