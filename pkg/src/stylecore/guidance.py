"""Guidance document parsing and validation.

A guidance document is JSON with region pairs (mask file references),
point pairs (x, y pixel coordinates), and the beta / spacing parameters.
The same schema is consumed by the CLI (mask paths relative to the
document) and the HTTP service (mask names resolved against uploaded
files).
"""

from __future__ import annotations

import json
import os
from importlib import resources
from typing import Callable

import jsonschema
import numpy as np

from .image import load_image
from .strotss import GuidanceSpec


class GuidanceError(ValueError):
    """Malformed guidance document; carries a field-level message."""


def guidance_schema() -> dict:
    with resources.files("stylecore.schemas").joinpath("guidance.schema.json").open() as fh:
        return json.load(fh)


def validate_document(doc: dict) -> None:
    try:
        jsonschema.validate(doc, guidance_schema())
    except jsonschema.ValidationError as e:
        path = ".".join(str(p) for p in e.absolute_path) or "(root)"
        raise GuidanceError(f"{path}: {e.message}")


def parse_guidance(
    doc: dict,
    mask_loader: Callable[[str], np.ndarray],
    content_hw: tuple[int, int],
    style_hw: tuple[int, int],
) -> GuidanceSpec:
    """Build a validated GuidanceSpec; ``mask_loader`` maps a mask reference
    to a 2-D array (nonzero = in-region)."""
    validate_document(doc)
    regions = []
    for k, entry in enumerate(doc.get("regions", [])):
        try:
            cm = mask_loader(entry["content_mask"])
            sm = mask_loader(entry["style_mask"])
        except GuidanceError:
            raise
        except Exception as e:
            raise GuidanceError(f"regions.{k}: cannot load mask: {e}")
        if cm.shape[:2] != content_hw:
            raise GuidanceError(
                f"regions.{k}.content_mask: dimensions {cm.shape[:2]} do not match the content image {content_hw}"
            )
        if sm.shape[:2] != style_hw:
            raise GuidanceError(
                f"regions.{k}.style_mask: dimensions {sm.shape[:2]} do not match the style image {style_hw}"
            )
        if not cm.any() or not sm.any():
            raise GuidanceError(f"regions.{k}: mask is empty")
        regions.append((cm, sm))
    points = []
    for k, entry in enumerate(doc.get("points", [])):
        cx, cy = entry["content"]
        sx, sy = entry["style"]
        cp, sp = (float(cy), float(cx)), (float(sy), float(sx))
        if not (0 <= cp[0] < content_hw[0] and 0 <= cp[1] < content_hw[1]):
            raise GuidanceError(f"points.{k}.content: {entry['content']} outside the content image")
        if not (0 <= sp[0] < style_hw[0] and 0 <= sp[1] < style_hw[1]):
            raise GuidanceError(f"points.{k}.style: {entry['style']} outside the style image")
        points.append((cp, sp))
    return GuidanceSpec(
        region_pairs=regions,
        point_pairs=points,
        beta=float(doc.get("beta", 5.0)),
        spacing=float(doc.get("spacing", 20.0)),
    )


def load_guidance_file(
    path: str, content_hw: tuple[int, int], style_hw: tuple[int, int]
) -> GuidanceSpec:
    """Parse a guidance JSON file; mask paths resolve relative to it."""
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as e:
            raise GuidanceError(f"not valid JSON: {e}")
    base = os.path.dirname(os.path.abspath(path))

    def loader(ref: str) -> np.ndarray:
        full = ref if os.path.isabs(ref) else os.path.join(base, ref)
        return load_image(full).data[:, :, 0]

    return parse_guidance(doc, loader, content_hw, style_hw)
