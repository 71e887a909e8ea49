/** Browser wiring: canvases, brush and click tools, the job panel. */

import { AnnotationState, Side, Stroke } from "./annotation.js";
import { buildConfig, buildJobForm, cancelJob, pollUntilDone, previewUrl, resultUrl, submitJob } from "./api.js";
import { rasterizeRegion } from "./masks.js";
import type { DstParams, JobKind, JobSnapshot, NnstParams, StrotssParams } from "./types.js";

const REGION_COLORS = ["#e4572e", "#29a19c", "#7768ae", "#f4a259", "#2e86ab", "#a23b72"];

interface SidePane {
  side: Side;
  image: HTMLImageElement | null;
  canvas: HTMLCanvasElement;
  file: File | null;
}

const state = new AnnotationState();
let tool: "point" | "brush" | "erase" = "point";
let regionIndex = 0;
let brushSize = 12;
let activeJob: string | null = null;

const $ = <T extends HTMLElement>(id: string): T => {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el as T;
};

function makePane(side: Side): SidePane {
  return { side, image: null, canvas: $(`${side}-canvas`) as HTMLCanvasElement, file: null };
}

const panes: Record<Side, SidePane> = {
  content: makePane("content"),
  style: makePane("style"),
};

function setStatus(text: string, kind: "info" | "error" = "info"): void {
  const el = $("status");
  el.textContent = text;
  el.className = kind;
}

function loadImage(side: Side, file: File): void {
  const pane = panes[side];
  pane.file = file;
  const img = new Image();
  img.onload = () => {
    pane.image = img;
    pane.canvas.width = img.naturalWidth;
    pane.canvas.height = img.naturalHeight;
    redraw();
  };
  img.src = URL.createObjectURL(file);
}

function canvasPos(pane: SidePane, ev: MouseEvent): [number, number] {
  const rect = pane.canvas.getBoundingClientRect();
  const x = ((ev.clientX - rect.left) / rect.width) * pane.canvas.width;
  const y = ((ev.clientY - rect.top) / rect.height) * pane.canvas.height;
  return [Math.max(0, Math.min(pane.canvas.width - 1, x)), Math.max(0, Math.min(pane.canvas.height - 1, y))];
}

function redraw(): void {
  for (const side of ["content", "style"] as Side[]) {
    const pane = panes[side];
    const ctx = pane.canvas.getContext("2d")!;
    ctx.clearRect(0, 0, pane.canvas.width, pane.canvas.height);
    if (pane.image) ctx.drawImage(pane.image, 0, 0);
    // region paint
    for (const r of state.regionIndices()) {
      const mask = rasterizeRegion(state.strokes, r, side, pane.canvas.width, pane.canvas.height);
      if (mask.isEmpty()) continue;
      const overlay = ctx.createImageData(pane.canvas.width, pane.canvas.height);
      const color = REGION_COLORS[r % REGION_COLORS.length];
      const [cr, cg, cb] = [1, 3, 5].map((i) => parseInt(color.slice(i, i + 2), 16));
      for (let i = 0; i < mask.data.length; i++) {
        if (mask.data[i]) {
          overlay.data[4 * i] = cr;
          overlay.data[4 * i + 1] = cg;
          overlay.data[4 * i + 2] = cb;
          overlay.data[4 * i + 3] = 110;
        }
      }
      ctx.putImageData(overlay, 0, 0);
      if (pane.image) {
        ctx.globalCompositeOperation = "destination-over";
        ctx.drawImage(pane.image, 0, 0);
        ctx.globalCompositeOperation = "source-over";
      }
    }
    // point markers
    state.points.forEach((p, i) => {
      const [x, y] = side === "content" ? p.content : p.style;
      drawMarker(ctx, x, y, `${i + 1}`, "#ffd166");
    });
    if (side === "content" && state.pending) {
      drawMarker(ctx, state.pending[0], state.pending[1], "?", "#ef476f");
    }
  }
  $("point-count").textContent = `${state.points.length}`;
  $("region-count").textContent = `${state.maskNames().length}`;
  const problems = state.validate();
  $("validation").textContent = problems.join("; ");
}

function drawMarker(ctx: CanvasRenderingContext2D, x: number, y: number, label: string, color: string): void {
  ctx.beginPath();
  ctx.arc(x, y, 6, 0, Math.PI * 2);
  ctx.fillStyle = color;
  ctx.fill();
  ctx.strokeStyle = "#222";
  ctx.stroke();
  ctx.fillStyle = "#222";
  ctx.font = "bold 9px sans-serif";
  ctx.textAlign = "center";
  ctx.textBaseline = "middle";
  ctx.fillText(label, x, y);
}

function attachPaneEvents(side: Side): void {
  const pane = panes[side];
  let stroke: Stroke | null = null;
  pane.canvas.addEventListener("mousedown", (ev) => {
    if (!pane.image) return;
    const [x, y] = canvasPos(pane, ev);
    if (tool === "point") {
      try {
        state.addClick(side, x, y);
        setStatus(state.pending ? "now click the style image" : "point pair added");
      } catch (e) {
        setStatus(String((e as Error).message), "error");
      }
      redraw();
    } else {
      stroke = { region: regionIndex, side, path: [[x, y, brushSize]], erase: tool === "erase" };
    }
  });
  pane.canvas.addEventListener("mousemove", (ev) => {
    if (stroke) {
      const [x, y] = canvasPos(pane, ev);
      stroke.path.push([x, y, brushSize]);
      redraw();
      const ctx = pane.canvas.getContext("2d")!;
      ctx.beginPath();
      ctx.arc(x, y, brushSize, 0, Math.PI * 2);
      ctx.strokeStyle = REGION_COLORS[regionIndex % REGION_COLORS.length];
      ctx.stroke();
    }
  });
  const finish = () => {
    if (stroke) {
      state.addStroke(stroke);
      stroke = null;
      redraw();
    }
  };
  pane.canvas.addEventListener("mouseup", finish);
  pane.canvas.addEventListener("mouseleave", finish);
}

async function maskBlob(side: Side, region: number): Promise<Blob> {
  const pane = panes[side];
  const mask = rasterizeRegion(state.strokes, region, side, pane.canvas.width, pane.canvas.height);
  const canvas = document.createElement("canvas");
  canvas.width = pane.canvas.width;
  canvas.height = pane.canvas.height;
  const ctx = canvas.getContext("2d")!;
  const img = ctx.createImageData(canvas.width, canvas.height);
  for (let i = 0; i < mask.data.length; i++) {
    const v = mask.data[i];
    img.data[4 * i] = v;
    img.data[4 * i + 1] = v;
    img.data[4 * i + 2] = v;
    img.data[4 * i + 3] = 255;
  }
  ctx.putImageData(img, 0, 0);
  return new Promise((resolve, reject) =>
    canvas.toBlob((b) => (b ? resolve(b) : reject(new Error("mask encode failed"))), "image/png")
  );
}

function currentParams(kind: JobKind): StrotssParams | NnstParams | DstParams {
  const num = (id: string) => parseFloat(($(id) as HTMLInputElement).value);
  const int = (id: string) => parseInt(($(id) as HTMLInputElement).value, 10);
  if (kind === "strotss") {
    return { alpha: num("p-alpha"), scales: int("p-scales"), steps: int("p-steps"), seed: int("p-seed") };
  }
  if (kind === "nnst") {
    return {
      alpha_blend: num("p-alpha-blend"),
      scales: int("p-scales"),
      updates: int("p-steps"),
      color_post: ($("p-color-post") as HTMLInputElement).checked,
      seed: int("p-seed"),
    };
  }
  return {
    base: ($("p-base") as HTMLSelectElement).value as DstParams["base"],
    regime: ($("p-regime") as HTMLSelectElement).value as DstParams["regime"],
    alpha: num("p-alpha"),
    scales: int("p-scales"),
    steps: int("p-steps"),
    seed: int("p-seed"),
  };
}

async function submit(): Promise<void> {
  const kind = ($("p-kind") as HTMLSelectElement).value as JobKind;
  if (!panes.content.file || !panes.style.file) {
    setStatus("load a content and a style image first", "error");
    return;
  }
  const problems = state.validate();
  if (problems.length) {
    setStatus(`cannot submit: ${problems.join("; ")}`, "error");
    return;
  }
  state.beta = parseFloat(($("p-beta") as HTMLInputElement).value);
  state.spacing = parseFloat(($("p-spacing") as HTMLInputElement).value);

  let guidance;
  let points: Blob | undefined;
  if (kind === "strotss" && (state.points.length || state.maskNames().length)) {
    const doc = state.exportDocument();
    const masks = new Map<string, Blob>();
    for (const entry of state.maskNames()) {
      const cBlob = await maskBlob("content", entry.region);
      const sBlob = await maskBlob("style", entry.region);
      masks.set(entry.content, cBlob);
      masks.set(entry.style, sBlob);
    }
    guidance = { doc, masks };
  }
  if (kind === "dst") {
    if (state.points.length < 3) {
      setStatus("the deformable pipeline needs at least 3 point pairs", "error");
      return;
    }
    points = new Blob([state.exportCorrespondences()], { type: "text/plain" });
  }
  const form = buildJobForm({
    kind,
    config: buildConfig(kind, currentParams(kind)),
    content: panes.content.file,
    style: panes.style.file,
    guidance,
    points,
  });
  try {
    setStatus("submitting...");
    const id = await submitJob("", form);
    activeJob = id;
    setStatus(`job ${id} running`);
    const snap = await pollUntilDone("", id, onJobUpdate);
    if (snap.status === "done") {
      ($("result-img") as HTMLImageElement).src = resultUrl("", id);
      setStatus(`job ${id} done`);
    } else {
      setStatus(`job ${id} failed: ${snap.reason}`, "error");
    }
    activeJob = null;
  } catch (e) {
    setStatus(String((e as Error).message), "error");
    activeJob = null;
  }
}

function onJobUpdate(snap: JobSnapshot): void {
  const p = snap.progress;
  $("job-status").textContent =
    `${snap.status} — scale ${p.scale ?? "-"} step ${p.step ?? "-"} ` +
    `loss ${typeof p.loss === "number" ? p.loss.toFixed(4) : "-"} ` +
    `(${snap.steps_done}/${snap.total_steps})`;
  if (snap.status === "running" && snap.steps_done > 0) {
    ($("preview-img") as HTMLImageElement).src = previewUrl("", snap.id);
  }
}

function wireUi(): void {
  attachPaneEvents("content");
  attachPaneEvents("style");
  ($("content-file") as HTMLInputElement).addEventListener("change", (ev) => {
    const f = (ev.target as HTMLInputElement).files?.[0];
    if (f) loadImage("content", f);
  });
  ($("style-file") as HTMLInputElement).addEventListener("change", (ev) => {
    const f = (ev.target as HTMLInputElement).files?.[0];
    if (f) loadImage("style", f);
  });
  for (const t of ["point", "brush", "erase"] as const) {
    $(`tool-${t}`).addEventListener("click", () => {
      tool = t;
      setStatus(`tool: ${t}`);
    });
  }
  ($("region-index") as HTMLInputElement).addEventListener("change", (ev) => {
    regionIndex = parseInt((ev.target as HTMLInputElement).value, 10) || 0;
  });
  ($("brush-size") as HTMLInputElement).addEventListener("change", (ev) => {
    brushSize = parseInt((ev.target as HTMLInputElement).value, 10) || 12;
  });
  $("undo").addEventListener("click", () => {
    state.undo();
    redraw();
  });
  $("clear").addEventListener("click", () => {
    state.clear();
    redraw();
  });
  $("export").addEventListener("click", () => {
    try {
      const doc = state.exportDocument();
      const blob = new Blob([JSON.stringify(doc, null, 2)], { type: "application/json" });
      const a = document.createElement("a");
      a.href = URL.createObjectURL(blob);
      a.download = "guidance.json";
      a.click();
    } catch (e) {
      setStatus(String((e as Error).message), "error");
    }
  });
  $("submit").addEventListener("click", () => void submit());
  $("cancel").addEventListener("click", () => {
    if (activeJob) void cancelJob("", activeJob);
  });
  ($("p-kind") as HTMLSelectElement).addEventListener("change", (ev) => {
    const kind = (ev.target as HTMLSelectElement).value;
    document.body.dataset.kind = kind;
  });
  document.body.dataset.kind = "strotss";
}

document.addEventListener("DOMContentLoaded", wireUi);
