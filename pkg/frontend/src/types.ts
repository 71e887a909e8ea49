/** Wire types shared with the job service. */

export interface GuidanceRegionEntry {
  content_mask: string;
  style_mask: string;
}

export interface GuidancePointEntry {
  /** Pixel coordinates as [x, y]. */
  content: [number, number];
  style: [number, number];
}

export interface GuidanceDoc {
  regions: GuidanceRegionEntry[];
  points: GuidancePointEntry[];
  beta: number;
  spacing: number;
}

export type JobKind = "strotss" | "nnst" | "dst";

export interface JobProgress {
  scale: number;
  step: number;
  loss: number;
}

export interface JobSnapshot {
  id: string;
  kind: JobKind;
  status: "queued" | "running" | "done" | "failed";
  reason: string;
  progress: Partial<JobProgress>;
  steps_done: number;
  total_steps: number;
  guidance: { entries: number; forbidden_hits: number };
}

export interface StrotssParams {
  alpha: number;
  scales: number;
  steps: number;
  seed: number;
}

export interface NnstParams {
  alpha_blend: number;
  scales: number;
  updates: number;
  color_post: boolean;
  seed: number;
}

export interface DstParams {
  base: "strotss" | "gram";
  regime: "low" | "med" | "high";
  alpha: number;
  scales: number;
  steps: number;
  seed: number;
}
