/** Mask rasterization, canvas-free so it can run under node tests.
 *
 * A mask is a Uint8Array of 0/255 at image resolution. Strokes stamp
 * filled discs along their path; the DOM layer turns masks into PNG blobs
 * with an offscreen canvas.
 */

import type { Stroke } from "./annotation.js";

export class MaskRaster {
  readonly data: Uint8Array;

  constructor(readonly width: number, readonly height: number) {
    this.data = new Uint8Array(width * height);
  }

  stampDisc(cx: number, cy: number, radius: number, value: number = 255): void {
    const r = Math.max(1, radius);
    const x0 = Math.max(0, Math.floor(cx - r));
    const x1 = Math.min(this.width - 1, Math.ceil(cx + r));
    const y0 = Math.max(0, Math.floor(cy - r));
    const y1 = Math.min(this.height - 1, Math.ceil(cy + r));
    const r2 = r * r;
    for (let y = y0; y <= y1; y++) {
      for (let x = x0; x <= x1; x++) {
        const dx = x - cx;
        const dy = y - cy;
        if (dx * dx + dy * dy <= r2) {
          this.data[y * this.width + x] = value;
        }
      }
    }
  }

  applyStroke(stroke: Stroke): void {
    const value = stroke.erase ? 0 : 255;
    for (const [x, y, radius] of stroke.path) {
      this.stampDisc(x, y, radius, value);
    }
  }

  isEmpty(): boolean {
    return this.data.every((v) => v === 0);
  }

  count(): number {
    let n = 0;
    for (const v of this.data) if (v) n++;
    return n;
  }
}

/** Rasterize all strokes of one region/side pair into a fresh mask. */
export function rasterizeRegion(
  strokes: Stroke[],
  region: number,
  side: "content" | "style",
  width: number,
  height: number
): MaskRaster {
  const mask = new MaskRaster(width, height);
  for (const s of strokes) {
    if (s.region === region && s.side === side) {
      mask.applyStroke(s);
    }
  }
  return mask;
}
