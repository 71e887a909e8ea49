import { describe, expect, it, vi } from "vitest";

import { MaskRaster, rasterizeRegion } from "../src/masks.js";
import { buildJobForm, pollUntilDone } from "../src/api.js";
import type { JobSnapshot } from "../src/types.js";

describe("mask rasterization", () => {
  it("stamps a disc of roughly pi r^2 pixels", () => {
    const m = new MaskRaster(64, 64);
    m.stampDisc(32, 32, 8);
    expect(m.count()).toBeGreaterThan(Math.PI * 64 * 0.8);
    expect(m.count()).toBeLessThan(Math.PI * 81 * 1.2);
  });

  it("clips at the border without wrapping", () => {
    const m = new MaskRaster(16, 16);
    m.stampDisc(0, 0, 5);
    expect(m.data[15]).toBe(0); // far corner of the first row untouched
    expect(m.data[0]).toBe(255);
  });

  it("rasterizes only the requested region and side", () => {
    const strokes = [
      { region: 0, side: "content" as const, path: [[4, 4, 2]] as [number, number, number][] },
      { region: 1, side: "content" as const, path: [[12, 12, 2]] as [number, number, number][] },
      { region: 0, side: "style" as const, path: [[8, 8, 2]] as [number, number, number][] },
    ];
    const m = rasterizeRegion(strokes, 0, "content", 16, 16);
    expect(m.data[4 * 16 + 4]).toBe(255);
    expect(m.data[12 * 16 + 12]).toBe(0);
    expect(m.data[8 * 16 + 8]).toBe(0);
  });

  it("erase strokes clear earlier paint in order", () => {
    const strokes = [
      { region: 0, side: "content" as const, path: [[8, 8, 4]] as [number, number, number][] },
      { region: 0, side: "content" as const, path: [[8, 8, 2]] as [number, number, number][], erase: true },
    ];
    const m = rasterizeRegion(strokes, 0, "content", 16, 16);
    expect(m.data[8 * 16 + 8]).toBe(0); // erased center
    expect(m.data[8 * 16 + 12]).toBe(255); // ring survives
  });
});

describe("job form assembly", () => {
  it("carries kind, config, images, guidance and masks", () => {
    const form = buildJobForm({
      kind: "strotss",
      config: { alpha: 16 },
      content: new Blob(["c"]),
      style: new Blob(["s"]),
      guidance: {
        doc: { regions: [], points: [], beta: 5, spacing: 20 },
        masks: new Map([["region-0-content.png", new Blob(["m"])]]),
      },
    });
    expect(form.get("kind")).toBe("strotss");
    expect(JSON.parse(form.get("config") as string)).toEqual({ alpha: 16 });
    expect(form.get("content")).toBeInstanceOf(Blob);
    expect(form.get("style")).toBeInstanceOf(Blob);
    expect(JSON.parse(form.get("guidance") as string).beta).toBe(5);
    expect(form.get("region-0-content.png")).toBeInstanceOf(Blob);
  });
});

describe("polling", () => {
  it("polls until done and reports each snapshot", async () => {
    const snaps: JobSnapshot[] = [
      { id: "j", kind: "strotss", status: "running", reason: "", progress: { step: 1 }, steps_done: 1, total_steps: 2, guidance: { entries: 0, forbidden_hits: 0 } },
      { id: "j", kind: "strotss", status: "done", reason: "", progress: { step: 2 }, steps_done: 2, total_steps: 2, guidance: { entries: 0, forbidden_hits: 0 } },
    ];
    let call = 0;
    vi.stubGlobal("fetch", async () => ({
      ok: true,
      json: async () => snaps[Math.min(call++, snaps.length - 1)],
    }));
    const seen: string[] = [];
    const final = await pollUntilDone("", "j", (s) => seen.push(s.status), 1, async () => {});
    expect(final.status).toBe("done");
    expect(seen).toEqual(["running", "done"]);
    vi.unstubAllGlobals();
  });
});
