/** Annotation bookkeeping, kept free of DOM so it can be unit tested.
 *
 * Points: clicks alternate content -> style; a content click opens a pending
 * pair, the matching style click closes it. Regions: brush strokes are
 * recorded per (region index, side); a region is exportable only when both
 * sides carry paint. Undo pops the latest action (stroke or click).
 */

import type { GuidanceDoc } from "./types.js";

export type Side = "content" | "style";

export interface PointPair {
  content: [number, number];
  style: [number, number];
}

export interface Stroke {
  region: number;
  side: Side;
  /** Brush path as [x, y, radius] triples in image pixels. */
  path: [number, number, number][];
  /** Erase strokes clear previously painted pixels of the region. */
  erase?: boolean;
}

type Action = { kind: "point" } | { kind: "pending" } | { kind: "stroke" };

export class AnnotationState {
  points: PointPair[] = [];
  pending: [number, number] | null = null;
  strokes: Stroke[] = [];
  beta = 5.0;
  spacing = 20.0;
  private history: Action[] = [];

  /** Alternate clicks: content first, then the paired style click. */
  addClick(side: Side, x: number, y: number): void {
    if (this.pending === null) {
      if (side !== "content") {
        throw new Error("click the content image first to start a pair");
      }
      this.pending = [x, y];
      this.history.push({ kind: "pending" });
    } else {
      if (side !== "style") {
        throw new Error("now click the style image to close the pair");
      }
      this.points.push({ content: this.pending, style: [x, y] });
      this.pending = null;
      this.history.push({ kind: "point" });
    }
  }

  addStroke(stroke: Stroke): void {
    if (stroke.region < 0 || !Number.isInteger(stroke.region)) {
      throw new Error("region index must be a nonnegative integer");
    }
    this.strokes.push(stroke);
    this.history.push({ kind: "stroke" });
  }

  undo(): void {
    const last = this.history.pop();
    if (!last) return;
    if (last.kind === "pending") {
      this.pending = null;
    } else if (last.kind === "point") {
      const p = this.points.pop();
      if (p) {
        // reopen the pair so the next style click can re-close it
        this.pending = p.content;
        this.history.push({ kind: "pending" });
      }
    } else {
      this.strokes.pop();
    }
  }

  clear(): void {
    this.points = [];
    this.pending = null;
    this.strokes = [];
    this.history = [];
  }

  /** Region indices painted on at least one side, ascending. */
  regionIndices(): number[] {
    return [...new Set(this.strokes.filter((s) => !s.erase).map((s) => s.region))].sort(
      (a, b) => a - b
    );
  }

  private sidesOf(region: number): Set<Side> {
    return new Set(
      this.strokes.filter((s) => s.region === region && !s.erase).map((s) => s.side)
    );
  }

  /** Human-readable problems that block submission; empty means valid. */
  validate(): string[] {
    const problems: string[] = [];
    if (this.pending !== null) {
      problems.push("unpaired point: the last content click has no style partner");
    }
    for (const r of this.regionIndices()) {
      const sides = this.sidesOf(r);
      if (!sides.has("content")) problems.push(`region ${r} has no content paint`);
      if (!sides.has("style")) problems.push(`region ${r} has no style paint`);
    }
    return problems;
  }

  /** Mask file names for every exportable region, in export order. */
  maskNames(): { region: number; content: string; style: string }[] {
    return this.regionIndices()
      .filter((r) => this.sidesOf(r).size === 2)
      .map((r) => ({
        region: r,
        content: `region-${r}-content.png`,
        style: `region-${r}-style.png`,
      }));
  }

  /** The exact document the job service accepts. */
  exportDocument(): GuidanceDoc {
    const problems = this.validate();
    if (problems.length) {
      throw new Error(problems.join("; "));
    }
    return {
      regions: this.maskNames().map((m) => ({
        content_mask: m.content,
        style_mask: m.style,
      })),
      points: this.points.map((p) => ({
        content: [p.content[0], p.content[1]],
        style: [p.style[0], p.style[1]],
      })),
      beta: this.beta,
      spacing: this.spacing,
    };
  }

  /** Keypoint correspondence file for the deformable pipeline: one line
   * per pair, "src_row src_col tgt_row tgt_col activation". */
  exportCorrespondences(): string {
    if (this.pending !== null) {
      throw new Error("unpaired point: the last content click has no style partner");
    }
    const lines = this.points.map(
      (p) =>
        `${p.content[1].toFixed(2)} ${p.content[0].toFixed(2)} ` +
        `${p.style[1].toFixed(2)} ${p.style[0].toFixed(2)} 1.0`
    );
    return lines.join("\n") + "\n";
  }
}

/** Structural check mirroring the service schema (field names and types). */
export function validateGuidanceDoc(doc: unknown): string[] {
  const problems: string[] = [];
  if (typeof doc !== "object" || doc === null) return ["document must be an object"];
  const d = doc as Record<string, unknown>;
  const allowed = new Set(["regions", "points", "beta", "spacing"]);
  for (const key of Object.keys(d)) {
    if (!allowed.has(key)) problems.push(`unknown field ${key}`);
  }
  if (d.regions !== undefined) {
    if (!Array.isArray(d.regions)) problems.push("regions must be an array");
    else
      d.regions.forEach((r, i) => {
        const e = r as Record<string, unknown>;
        if (typeof e?.content_mask !== "string" || !e.content_mask)
          problems.push(`regions.${i}.content_mask must be a non-empty string`);
        if (typeof e?.style_mask !== "string" || !e.style_mask)
          problems.push(`regions.${i}.style_mask must be a non-empty string`);
      });
  }
  if (d.points !== undefined) {
    if (!Array.isArray(d.points)) problems.push("points must be an array");
    else
      d.points.forEach((p, i) => {
        const e = p as Record<string, unknown>;
        for (const side of ["content", "style"] as const) {
          const v = e?.[side];
          if (!Array.isArray(v) || v.length !== 2 || !v.every((x) => typeof x === "number"))
            problems.push(`points.${i}.${side} must be [x, y]`);
        }
      });
  }
  for (const field of ["beta", "spacing"] as const) {
    const v = d[field];
    if (v !== undefined && (typeof v !== "number" || !(v > 0)))
      problems.push(`${field} must be a positive number`);
  }
  return problems;
}
