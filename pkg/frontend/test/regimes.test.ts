import { describe, expect, it } from "vitest";

import { buildConfig } from "../src/api.js";
import { REGIMES, regimeParams } from "../src/regimes.js";

describe("deformation regimes", () => {
  it("carries the exact preset pairs per base method", () => {
    expect(REGIMES.strotss.low).toEqual({ beta: 0.3, gamma: 75 });
    expect(REGIMES.strotss.med).toEqual({ beta: 0.5, gamma: 50 });
    expect(REGIMES.strotss.high).toEqual({ beta: 0.7, gamma: 10 });
    expect(REGIMES.gram.low).toEqual({ beta: 3, gamma: 750 });
    expect(REGIMES.gram.med).toEqual({ beta: 7, gamma: 100 });
    expect(REGIMES.gram.high).toEqual({ beta: 15, gamma: 100 });
  });

  it("the selector resolves low/strotss into the request config", () => {
    const config = buildConfig("dst", {
      base: "strotss",
      regime: "low",
      alpha: 8,
      scales: 3,
      steps: 150,
      seed: 0,
    });
    expect(config.beta).toBe(0.3);
    expect(config.gamma).toBe(75);
    expect(config.base).toBe("strotss");
    expect(config.regime).toBe("low");
  });

  it("unknown regimes are rejected", () => {
    expect(() => regimeParams("strotss", "extreme" as never)).toThrow(/unknown regime/);
  });
});

describe("config round trip", () => {
  it("strotss form mirrors the CLI flags", () => {
    expect(buildConfig("strotss", { alpha: 16, scales: 4, steps: 200, seed: 7 })).toEqual({
      alpha: 16,
      scales: 4,
      steps: 200,
      seed: 7,
    });
  });

  it("nnst form mirrors the CLI flags", () => {
    expect(
      buildConfig("nnst", { alpha_blend: 0.25, scales: 4, updates: 200, color_post: false, seed: 1 })
    ).toEqual({ alpha_blend: 0.25, scales: 4, updates: 200, color_post: false, seed: 1 });
  });
});
