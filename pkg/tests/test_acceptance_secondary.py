"""Acceptance for the browser-tool integration, driven end to end through
the HTTP surface with the exact document the UI export produces."""

import io
import json
import time
from pathlib import Path

import numpy as np
import pytest
from fastapi.testclient import TestClient
from PIL import Image

from stylecore.guidance import validate_document
from stylecore.service import create_app
from stylecore.synth import shapes, textured

FIXTURE = Path(__file__).parent.parent / "frontend" / "fixtures" / "guidance.sample.json"


def png_bytes(img) -> bytes:
    arr = (np.clip(img.data, 0, 1) * 255).round().astype("uint8")
    buf = io.BytesIO()
    Image.fromarray(arr).save(buf, format="PNG")
    return buf.getvalue()


def mask_bytes(mask) -> bytes:
    buf = io.BytesIO()
    Image.fromarray(mask.astype(np.uint8), mode="L").save(buf, format="PNG")
    return buf.getvalue()


def report(name: str, ok: bool, detail: str = "") -> None:
    line = f"ACCEPTANCE {name}: {'PASS' if ok else 'FAIL'}"
    if detail:
        line += f"  ({detail})"
    print(line)
    assert ok, line


def test_s01_ui_guidance_round_trip():
    doc = json.loads(FIXTURE.read_text())
    assert len(doc["points"]) == 2 and len(doc["regions"]) == 1
    validate_document(doc)  # the service schema accepts the UI export

    client = TestClient(create_app(workers=1))
    content = textured(71, 64, 64)
    style = shapes(72, 64, 64)
    # region cells chosen away from the point lattices so the strict
    # exclusion semantics (no relaxation) are what this criterion exercises
    cmask = np.zeros((64, 64))
    cmask[8:16, 16:28] = 255
    smask = np.zeros((64, 64))
    smask[36:44, 48:60] = 255
    files = [
        ("content", ("content.png", png_bytes(content), "image/png")),
        ("style", ("style.png", png_bytes(style), "image/png")),
        (doc["regions"][0]["content_mask"], (doc["regions"][0]["content_mask"], mask_bytes(cmask), "image/png")),
        (doc["regions"][0]["style_mask"], (doc["regions"][0]["style_mask"], mask_bytes(smask), "image/png")),
    ]
    cfg = {"scales": 1, "steps": 30, "samples": 128, "coarsest_long_side": 64}
    r = client.post(
        "/jobs",
        data={"kind": "strotss", "config": json.dumps(cfg), "guidance": json.dumps(doc)},
        files=files,
    )
    assert r.status_code == 201, r.text
    jid = r.json()["id"]
    for _ in range(600):
        snap = client.get(f"/jobs/{jid}").json()
        if snap["status"] in ("done", "failed"):
            break
        time.sleep(0.2)
    ok = (
        snap["status"] == "done"
        and snap["guidance"]["entries"] > 0
        and snap["guidance"]["forbidden_hits"] == 0
    )
    report(
        "ui-guidance-round-trip",
        ok,
        f"status {snap['status']}, guidance entries {snap['guidance']['entries']}, "
        f"forbidden argmin hits {snap['guidance']['forbidden_hits']}",
    )


def test_s02_regime_mapping():
    client = TestClient(create_app(workers=1))
    points = "8 8 10 9 1.0\n8 40 7 41 1.0\n40 8 41 7 1.0\n40 40 38 38 1.0\n"
    expected = {
        ("strotss", "low"): (0.3, 75.0),
        ("strotss", "med"): (0.5, 50.0),
        ("strotss", "high"): (0.7, 10.0),
        ("gram", "low"): (3.0, 750.0),
        ("gram", "med"): (7.0, 100.0),
        ("gram", "high"): (15.0, 100.0),
    }
    mismatches = []
    for (base, regime), (beta, gamma) in expected.items():
        files = [
            ("content", ("c.png", png_bytes(textured(73, 48, 48)), "image/png")),
            ("style", ("s.png", png_bytes(shapes(74, 48, 48)), "image/png")),
            ("points", ("p.txt", points.encode(), "text/plain")),
        ]
        cfg = {"base": base, "regime": regime, "scales": 1, "steps": 1, "samples": 16}
        r = client.post("/jobs", data={"kind": "dst", "config": json.dumps(cfg)}, files=files)
        assert r.status_code == 201
        jid = r.json()["id"]
        for _ in range(300):
            snap = client.get(f"/jobs/{jid}").json()
            if snap["resolved_config"] or snap["status"] in ("done", "failed"):
                break
            time.sleep(0.1)
        got = (snap["resolved_config"].get("beta"), snap["resolved_config"].get("gamma"))
        if got != (beta, gamma):
            mismatches.append((base, regime, got))
        # let it finish so the worker frees up
        for _ in range(600):
            if client.get(f"/jobs/{jid}").json()["status"] in ("done", "failed"):
                break
            time.sleep(0.1)
    report("regime-mapping", not mismatches, f"all six presets resolved exactly {dict(expected)}")
