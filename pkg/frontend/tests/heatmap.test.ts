import { describe, expect, it } from "vitest";

import {
  colorSeverity,
  cssColor,
  formatV,
  vulnerabilityColor,
} from "../src/heatmap.js";

describe("vulnerability heatmap scale", () => {
  it("is monotone in V", () => {
    let prev = -Infinity;
    for (let v = 0; v <= 1.0001; v += 0.01) {
      const sev = colorSeverity(vulnerabilityColor(v));
      expect(sev).toBeGreaterThanOrEqual(prev);
      prev = sev;
    }
  });

  it("clamps out-of-range values", () => {
    expect(vulnerabilityColor(-1)).toEqual(vulnerabilityColor(0));
    expect(vulnerabilityColor(2)).toEqual(vulnerabilityColor(1));
  });

  it("produces css colors", () => {
    expect(cssColor(0)).toMatch(/^rgba\(\d+,\d+,\d+,0.55\)$/);
  });

  it("displays V to exactly 3 decimals", () => {
    expect(formatV(0)).toBe("0.000");
    expect(formatV(0.875)).toBe("0.875");
    expect(formatV(0.12345)).toBe("0.123");
    expect(formatV(1)).toBe("1.000");
  });
});
