/** Job-service client: form assembly, submission, polling, cancel. */

import type { DstParams, GuidanceDoc, JobKind, JobSnapshot, NnstParams, StrotssParams } from "./types.js";
import { regimeParams } from "./regimes.js";

export interface JobRequestParts {
  kind: JobKind;
  config: Record<string, unknown>;
  content: Blob;
  style: Blob;
  guidance?: { doc: GuidanceDoc; masks: Map<string, Blob> };
  points?: Blob;
}

/** The config object each pipeline's form resolves to; mirrors the CLI. */
export function buildConfig(
  kind: JobKind,
  params: StrotssParams | NnstParams | DstParams
): Record<string, unknown> {
  if (kind === "strotss") {
    const p = params as StrotssParams;
    return { alpha: p.alpha, scales: p.scales, steps: p.steps, seed: p.seed };
  }
  if (kind === "nnst") {
    const p = params as NnstParams;
    return {
      alpha_blend: p.alpha_blend,
      scales: p.scales,
      updates: p.updates,
      color_post: p.color_post,
      seed: p.seed,
    };
  }
  const p = params as DstParams;
  const { beta, gamma } = regimeParams(p.base, p.regime);
  return {
    base: p.base,
    regime: p.regime,
    beta,
    gamma,
    alpha: p.alpha,
    scales: p.scales,
    steps: p.steps,
    seed: p.seed,
  };
}

export function buildJobForm(parts: JobRequestParts): FormData {
  const form = new FormData();
  form.append("kind", parts.kind);
  form.append("config", JSON.stringify(parts.config));
  form.append("content", parts.content, "content.png");
  form.append("style", parts.style, "style.png");
  if (parts.guidance) {
    form.append("guidance", JSON.stringify(parts.guidance.doc));
    for (const [name, blob] of parts.guidance.masks) {
      form.append(name, blob, name);
    }
  }
  if (parts.points) {
    form.append("points", parts.points, "points.txt");
  }
  return form;
}

export async function submitJob(baseUrl: string, form: FormData): Promise<string> {
  const res = await fetch(`${baseUrl}/jobs`, { method: "POST", body: form });
  if (!res.ok) {
    const detail = await res.json().catch(() => ({ detail: res.statusText }));
    throw new Error(`submit failed (${res.status}): ${detail.detail ?? res.statusText}`);
  }
  return (await res.json()).id as string;
}

export async function fetchStatus(baseUrl: string, id: string): Promise<JobSnapshot> {
  const res = await fetch(`${baseUrl}/jobs/${id}`);
  if (!res.ok) throw new Error(`status failed (${res.status})`);
  return (await res.json()) as JobSnapshot;
}

export async function cancelJob(baseUrl: string, id: string): Promise<void> {
  const res = await fetch(`${baseUrl}/jobs/${id}`, { method: "DELETE" });
  if (!res.ok && res.status !== 409) throw new Error(`cancel failed (${res.status})`);
}

export function resultUrl(baseUrl: string, id: string): string {
  return `${baseUrl}/jobs/${id}/result`;
}

export function previewUrl(baseUrl: string, id: string): string {
  // cache-busting query so the <img> actually refreshes while polling
  return `${baseUrl}/jobs/${id}/preview?t=${Date.now()}`;
}

/** Poll at a fixed interval until the job finishes; reports every snapshot. */
export async function pollUntilDone(
  baseUrl: string,
  id: string,
  onUpdate: (snap: JobSnapshot) => void,
  intervalMs = 1000,
  sleeper: (ms: number) => Promise<void> = (ms) => new Promise((r) => setTimeout(r, ms))
): Promise<JobSnapshot> {
  for (;;) {
    const snap = await fetchStatus(baseUrl, id);
    onUpdate(snap);
    if (snap.status === "done" || snap.status === "failed") {
      return snap;
    }
    await sleeper(intervalMs);
  }
}
