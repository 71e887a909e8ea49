"""HTTP job service: submit stylization jobs, poll progress, fetch results.

Jobs are held in memory and executed on a small worker pool; result PNGs
live on disk in a per-service temp directory.  Status snapshots are plain
dict replacements, safe to read without locks; cancellation is cooperative
at optimizer-step boundaries.
"""

from __future__ import annotations

import io
import json
import os
import tempfile
import threading
import uuid
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from fastapi import FastAPI, HTTPException, Request
from fastapi.responses import FileResponse, JSONResponse
from fastapi.staticfiles import StaticFiles
from starlette.datastructures import UploadFile

from . import dst as dst_mod
from . import nnst as nnst_mod
from . import strotss as strotss_mod
from .guidance import GuidanceError, guidance_schema, parse_guidance
from .image import ImageBuffer, load_image, save_image
from .strotss import GuidanceSpec

PREVIEW_EVERY = 25


class _Cancelled(Exception):
    pass


@dataclass
class Job:
    id: str
    kind: str
    total_steps: int
    status: str = "queued"  # queued | running | done | failed
    reason: str = ""
    progress: dict = field(default_factory=dict)
    guidance_stats: dict = field(default_factory=lambda: {"entries": 0, "forbidden_hits": 0})
    resolved_config: dict = field(default_factory=dict)
    result_path: Optional[str] = None
    preview_path: Optional[str] = None
    cancel_requested: bool = False
    steps_done: int = 0

    def snapshot(self) -> dict:
        return {
            "id": self.id,
            "kind": self.kind,
            "status": self.status,
            "reason": self.reason,
            "progress": dict(self.progress),
            "steps_done": min(self.steps_done, self.total_steps),
            "total_steps": self.total_steps,
            "guidance": dict(self.guidance_stats),
            "resolved_config": dict(self.resolved_config),
        }


class JobRunner:
    def __init__(self, workers: int | None = None, work_dir: str | None = None):
        n = workers or max(1, (os.cpu_count() or 2) // 2)
        self.pool = ThreadPoolExecutor(max_workers=n)
        self.jobs: dict[str, Job] = {}
        self.work_dir = work_dir or tempfile.mkdtemp(prefix="stylecore-jobs-")
        self._lock = threading.Lock()

    def submit(self, kind: str, payload: dict) -> Job:
        total = _estimate_total_steps(kind, payload)
        job = Job(id=uuid.uuid4().hex[:12], kind=kind, total_steps=total)
        with self._lock:
            self.jobs[job.id] = job
        self.pool.submit(self._run, job, payload)
        return job

    def get(self, job_id: str) -> Job:
        job = self.jobs.get(job_id)
        if job is None:
            raise HTTPException(status_code=404, detail="unknown job")
        return job

    def cancel(self, job_id: str) -> Job:
        job = self.get(job_id)
        if job.status in ("done", "failed"):
            raise HTTPException(status_code=409, detail=f"job already {job.status}")
        job.cancel_requested = True
        return job

    # ---- execution -------------------------------------------------------

    def _run(self, job: Job, payload: dict) -> None:
        if job.cancel_requested:
            job.status = "failed"
            job.reason = "cancelled"
            return
        job.status = "running"
        try:
            image = _execute(job, payload, self.work_dir)
            out = os.path.join(self.work_dir, f"{job.id}.png")
            save_image(image, out)
            job.result_path = out
            job.status = "done"
        except _Cancelled:
            job.status = "failed"
            job.reason = "cancelled"
        except Exception as e:  # surfaced verbatim in the status snapshot
            job.status = "failed"
            job.reason = str(e)


def _estimate_total_steps(kind: str, payload: dict) -> int:
    cfg = payload.get("config", {})
    if kind == "strotss":
        return int(cfg.get("scales", 4)) * int(cfg.get("steps", 200))
    if kind == "nnst":
        scales = int(cfg.get("scales", 4))
        updates = int(cfg.get("updates", 200))
        split = updates if cfg.get("split_phase", True) else 0
        return scales * updates + split
    if kind == "dst":
        return int(cfg.get("scales", 3)) * int(cfg.get("steps", 150))
    raise HTTPException(status_code=400, detail=f"unknown job kind {kind!r}")


def _execute(job: Job, payload: dict, work_dir: str) -> ImageBuffer:
    content: ImageBuffer = payload["content"]
    style: ImageBuffer = payload["style"]
    cfg = payload.get("config", {})
    preview = os.path.join(work_dir, f"{job.id}.preview.png")

    def on_step(diag: dict) -> None:
        if job.cancel_requested:
            raise _Cancelled()
        job.steps_done += 1
        job.progress = {
            "scale": diag.get("scale", 0),
            "step": diag["step"],
            "loss": diag["loss"],
        }
        if "guidance_entries" in diag:
            job.guidance_stats = {
                "entries": job.guidance_stats["entries"] + diag["guidance_entries"],
                "forbidden_hits": job.guidance_stats["forbidden_hits"] + diag["forbidden_hits"],
            }
        if job.steps_done % PREVIEW_EVERY == 0 and "image" in diag:
            save_image(ImageBuffer(np.clip(diag["image"], 0.0, 1.0)), preview)
            job.preview_path = preview

    if job.kind == "strotss":
        config = strotss_mod.StrotssConfig(
            alpha=float(cfg.get("alpha", 16.0)),
            scales=int(cfg.get("scales", 4)),
            steps_per_scale=int(cfg.get("steps", 200)),
            coarsest_long_side=int(cfg.get("coarsest_long_side", 64)),
            samples=int(cfg.get("samples", 1024)),
            seed=int(cfg.get("seed", 0)),
        )
        result = strotss_mod.stylize(content, style, config, guidance=payload.get("guidance"), on_step=on_step)
        return result.image
    if job.kind == "nnst":
        config = nnst_mod.NnstConfig(
            alpha_blend=float(cfg.get("alpha_blend", 0.25)),
            scales=int(cfg.get("scales", 4)),
            updates=int(cfg.get("updates", 200)),
            split_updates=int(cfg.get("updates", 200)),
            split_phase=bool(cfg.get("split_phase", True)),
            color_post=bool(cfg.get("color_post", True)),
            seed=int(cfg.get("seed", 0)),
        )
        return nnst_mod.stylize(content, style, config, on_step=on_step).image
    if job.kind == "dst":
        corr = payload.get("points")
        if corr is None:
            raise HTTPException(status_code=400, detail="dst jobs need a points file")
        regime = cfg.get("regime")
        base = cfg.get("base", "strotss")
        if regime:
            config = dst_mod.DstConfig.from_regime(base, regime, alpha=float(cfg.get("alpha", 8.0)))
        else:
            config = dst_mod.DstConfig(
                base=base,
                alpha=float(cfg.get("alpha", 8.0)),
                beta=float(cfg.get("beta", 0.5)),
                gamma=float(cfg.get("gamma", 50.0)),
            )
        config.base_config = strotss_mod.StrotssConfig(
            scales=int(cfg.get("scales", 3)),
            steps_per_scale=int(cfg.get("steps", 150)),
            samples=int(cfg.get("samples", 1024)),
            seed=int(cfg.get("seed", 0)),
        )
        job.resolved_config = {"base": config.base, "beta": config.beta, "gamma": config.gamma}
        prepared = dst_mod.prepare_correspondences(corr, align=bool(cfg.get("align", True)))
        return dst_mod.dst_stylize(content, style, prepared, config, on_step=on_step).image
    raise HTTPException(status_code=400, detail=f"unknown job kind {job.kind!r}")


async def _read_image(upload: UploadFile) -> ImageBuffer:
    data = await upload.read()
    try:
        return load_image(io.BytesIO(data))
    except Exception as e:
        raise HTTPException(status_code=400, detail=f"cannot decode image {upload.filename!r}: {e}")


def create_app(assets_dir: str | None = None, workers: int | None = None) -> FastAPI:
    app = FastAPI(title="stylecore service")
    runner = JobRunner(workers=workers)
    app.state.runner = runner

    @app.get("/schemas/guidance.json")
    def get_schema():
        return JSONResponse(guidance_schema())

    @app.post("/jobs")
    async def post_job(request: Request):
        form = await request.form()
        kind = form.get("kind")
        if kind not in ("strotss", "nnst", "dst"):
            raise HTTPException(status_code=400, detail="kind must be strotss, nnst, or dst")
        if "content" not in form or "style" not in form:
            raise HTTPException(status_code=400, detail="content and style images are required")
        payload: dict = {}
        payload["content"] = await _read_image(form["content"])
        payload["style"] = await _read_image(form["style"])
        cfg_raw = form.get("config")
        if cfg_raw:
            try:
                payload["config"] = json.loads(cfg_raw)
            except json.JSONDecodeError as e:
                raise HTTPException(status_code=400, detail=f"config: not valid JSON: {e}")
        else:
            payload["config"] = {}

        guidance_raw = form.get("guidance")
        if guidance_raw:
            try:
                doc = json.loads(guidance_raw)
            except json.JSONDecodeError as e:
                raise HTTPException(status_code=400, detail=f"guidance: not valid JSON: {e}")
            masks = {}
            for key, value in form.multi_items():
                if isinstance(value, UploadFile) and key not in ("content", "style", "points"):
                    raw = await value.read()
                    try:
                        masks[key] = load_image(io.BytesIO(raw)).data[:, :, 0]
                    except Exception as e:
                        raise HTTPException(status_code=400, detail=f"mask {key!r}: {e}")

            def loader(ref: str) -> np.ndarray:
                if ref not in masks:
                    raise GuidanceError(f"mask {ref!r} was not uploaded")
                return masks[ref]

            try:
                payload["guidance"] = parse_guidance(
                    doc,
                    loader,
                    (payload["content"].height, payload["content"].width),
                    (payload["style"].height, payload["style"].width),
                )
            except GuidanceError as e:
                raise HTTPException(status_code=400, detail=f"guidance: {e}")

        if "points" in form and isinstance(form["points"], UploadFile):
            raw = (await form["points"].read()).decode()
            rows = []
            for ln, line in enumerate(raw.splitlines(), 1):
                line = line.split("#", 1)[0].strip()
                if not line:
                    continue
                parts = [float(p) for p in line.replace(",", " ").split()]
                if len(parts) not in (4, 5):
                    raise HTTPException(status_code=400, detail=f"points line {ln}: expected 4 or 5 numbers")
                rows.append(parts + [1.0] * (5 - len(parts)))
            if rows:
                arr = np.asarray(rows)
                payload["points"] = dst_mod.CorrespondenceSet(arr[:, 0:2], arr[:, 2:4], arr[:, 4])

        job = runner.submit(kind, payload)
        return JSONResponse({"id": job.id}, status_code=201)

    @app.get("/jobs/{job_id}")
    def get_job(job_id: str):
        return JSONResponse(runner.get(job_id).snapshot())

    @app.get("/jobs/{job_id}/result")
    def get_result(job_id: str):
        job = runner.get(job_id)
        if job.status != "done" or not job.result_path:
            raise HTTPException(status_code=404, detail=f"no result: job is {job.status}")
        return FileResponse(job.result_path, media_type="image/png")

    @app.get("/jobs/{job_id}/preview")
    def get_preview(job_id: str):
        job = runner.get(job_id)
        path = job.preview_path or (job.result_path if job.status == "done" else None)
        if not path:
            raise HTTPException(status_code=404, detail="no preview yet")
        return FileResponse(path, media_type="image/png")

    @app.delete("/jobs/{job_id}")
    def delete_job(job_id: str):
        job = runner.cancel(job_id)
        return JSONResponse({"id": job.id, "status": job.status, "cancel_requested": True})

    if assets_dir is None:
        bundled = os.path.join(os.path.dirname(os.path.dirname(os.path.dirname(os.path.dirname(__file__)))), "frontend", "dist")
        assets_dir = bundled if os.path.isdir(bundled) else None
    if assets_dir:
        app.mount("/", StaticFiles(directory=assets_dir, html=True), name="ui")

    return app
