import { describe, expect, it } from "vitest";

import { STATUS_COLORS, likelihoodColor, statusColor } from "../src/colors.js";

describe("status colors", () => {
  it("maps every protocol status to a distinct color", () => {
    const statuses = ["active", "capture", "dead", "translocating"] as const;
    const colors = statuses.map((s) => statusColor(s));
    expect(new Set(colors).size).toBe(4);
    expect(Object.keys(STATUS_COLORS).sort()).toEqual([...statuses].sort());
  });

  it("uses blue for capture and dark red for dead", () => {
    expect(statusColor("capture")).toBe("#2f6fd6");
    expect(statusColor("dead")).toBe("#8b1a1a");
    expect(statusColor("translocating")).toBe("#8fd694");
  });
});

describe("likelihood palette", () => {
  it("runs purple to gold", () => {
    expect(likelihoodColor(0)).toBe("rgb(68, 13, 103)");
    expect(likelihoodColor(1)).toBe("rgb(245, 196, 44)");
  });

  it("clamps out-of-range probabilities", () => {
    expect(likelihoodColor(-3)).toBe(likelihoodColor(0));
    expect(likelihoodColor(7)).toBe(likelihoodColor(1));
  });

  it("interpolates monotonically in red", () => {
    const reds = [0, 0.25, 0.5, 0.75, 1].map(
      (p) => Number(likelihoodColor(p).match(/rgb\((\d+)/)![1]),
    );
    for (let i = 1; i < reds.length; i++) expect(reds[i]).toBeGreaterThan(reds[i - 1]);
  });
});
