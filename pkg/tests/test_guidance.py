import json

import numpy as np
import pytest
from PIL import Image

from stylecore import guidance as gd
from stylecore.strotss import GuidanceSpec


def write_mask(path, arr):
    Image.fromarray(arr.astype(np.uint8), mode="L").save(path)


def make_doc(tmp_path, regions=True, points=True):
    doc = {"beta": 5.0, "spacing": 12.0, "regions": [], "points": []}
    if regions:
        cm = np.zeros((48, 48))
        cm[4:20, 4:20] = 255
        sm = np.zeros((40, 40))
        sm[10:30, 10:30] = 255
        write_mask(tmp_path / "cm.png", cm)
        write_mask(tmp_path / "sm.png", sm)
        doc["regions"].append({"content_mask": "cm.png", "style_mask": "sm.png"})
    if points:
        doc["points"].append({"content": [10, 22], "style": [5, 7]})
    path = tmp_path / "guidance.json"
    path.write_text(json.dumps(doc))
    return path


def test_load_valid_document(tmp_path):
    path = make_doc(tmp_path)
    g = gd.load_guidance_file(path, (48, 48), (40, 40))
    assert isinstance(g, GuidanceSpec)
    assert len(g.region_pairs) == 1
    assert len(g.point_pairs) == 1
    # x,y in the document becomes (row, col)
    assert g.point_pairs[0][0] == (22.0, 10.0)
    assert g.beta == 5.0 and g.spacing == 12.0


def test_schema_rejects_unknown_fields(tmp_path):
    path = tmp_path / "g.json"
    path.write_text(json.dumps({"bogus": 1}))
    with pytest.raises(gd.GuidanceError):
        gd.load_guidance_file(path, (8, 8), (8, 8))


def test_schema_rejects_malformed_point(tmp_path):
    path = tmp_path / "g.json"
    path.write_text(json.dumps({"points": [{"content": [1], "style": [2, 3]}]}))
    with pytest.raises(gd.GuidanceError) as e:
        gd.load_guidance_file(path, (8, 8), (8, 8))
    assert "points" in str(e.value)


def test_mask_dimension_mismatch_reports_field(tmp_path):
    path = make_doc(tmp_path)
    with pytest.raises(gd.GuidanceError) as e:
        gd.load_guidance_file(path, (64, 64), (40, 40))
    assert "regions.0.content_mask" in str(e.value)


def test_point_out_of_bounds(tmp_path):
    path = make_doc(tmp_path, regions=False)
    with pytest.raises(gd.GuidanceError) as e:
        gd.load_guidance_file(path, (12, 48), (40, 40))
    assert "points.0" in str(e.value)


def test_missing_mask_file(tmp_path):
    doc = {"regions": [{"content_mask": "nope.png", "style_mask": "also_nope.png"}]}
    path = tmp_path / "g.json"
    path.write_text(json.dumps(doc))
    with pytest.raises(gd.GuidanceError):
        gd.load_guidance_file(path, (8, 8), (8, 8))


def test_not_json(tmp_path):
    path = tmp_path / "g.json"
    path.write_text("not json at all {")
    with pytest.raises(gd.GuidanceError):
        gd.load_guidance_file(path, (8, 8), (8, 8))


def test_ui_fixture_validates_against_schema():
    """Shared contract with the browser tool: its exported document shape
    must satisfy the service schema."""
    import pathlib

    fixture = pathlib.Path(__file__).parent.parent / "frontend" / "fixtures" / "guidance.sample.json"
    doc = json.loads(fixture.read_text())
    gd.validate_document(doc)
    assert len(doc["points"]) == 2
    assert len(doc["regions"]) == 1
