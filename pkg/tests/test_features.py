import numpy as np
import pytest

from stylecore import autodiff as ad
from stylecore import features as ft
from stylecore.image import ImageBuffer


SPEC = ft.FilterBankSpec(seed=0)


def test_default_spec_dimensions():
    # 2 layers per block at widths 16/32/64/128
    assert SPEC.dim == 2 * (16 + 32 + 64 + 128) == 480
    assert SPEC.n_layers == 8


def test_extract_shape_64():
    img = ImageBuffer(np.random.default_rng(0).random((64, 64, 3)))
    t = ft.extract_hypercolumns(img, SPEC)
    assert (t.grid_h, t.grid_w, t.dim) == (16, 16, 480)


def test_extract_ceil_grid_for_odd_sizes():
    img = ImageBuffer(np.random.default_rng(0).random((66, 35, 3)))
    t = ft.extract_hypercolumns(img, SPEC)
    assert (t.grid_h, t.grid_w) == (17, 9)


def test_extract_deterministic():
    img = ImageBuffer(np.random.default_rng(1).random((48, 48, 3)))
    a = ft.extract_hypercolumns(img, SPEC)
    b = ft.extract_hypercolumns(img, SPEC)
    assert np.array_equal(a.data.data, b.data.data)


def test_same_seed_same_weights():
    a = ft.build_filter_bank(ft.FilterBankSpec(seed=7))
    b = ft.build_filter_bank(ft.FilterBankSpec(seed=7))
    assert all(np.array_equal(x, y) for x, y in zip(a.kernels, b.kernels))
    c = ft.build_filter_bank(ft.FilterBankSpec(seed=8))
    assert not np.array_equal(a.kernels[0], c.kernels[0])


def test_zero_image_gives_zero_features():
    t = ft.extract_hypercolumns(ImageBuffer(np.zeros((32, 32, 3))), SPEC)
    assert np.abs(t.data.data).max() == 0.0


def test_too_small_image_rejected():
    with pytest.raises(ValueError):
        ft.extract_hypercolumns(ImageBuffer(np.zeros((4, 4, 3))), SPEC)


def test_included_layers_subset():
    spec = ft.FilterBankSpec(seed=0, included_layers=(0, 3, 7))
    img = ImageBuffer(np.random.default_rng(2).random((32, 32, 3)))
    t = ft.extract_hypercolumns(img, spec)
    assert t.dim == 16 + 32 + 128


def test_rotations_zero_entry_matches_plain():
    img = ImageBuffer(np.random.default_rng(3).random((40, 40, 3)))
    rots = ft.extract_with_rotations(img, SPEC)
    plain = ft.extract_hypercolumns(img, SPEC)
    assert np.array_equal(rots[0].data.data, plain.data.data)


def test_rotations_constant_image_identical():
    rots = ft.extract_with_rotations(ImageBuffer(np.full((48, 48, 3), 0.3)), SPEC)
    for r in rots[1:]:
        assert np.array_equal(rots[0].data.data, r.data.data)


def test_rotating_input_permutes_the_list():
    img = ImageBuffer(np.random.default_rng(4).random((40, 40, 3)))
    rots = ft.extract_with_rotations(img, SPEC)
    rots90 = ft.extract_with_rotations(
        ImageBuffer(np.ascontiguousarray(np.rot90(img.data))), SPEC
    )
    for k in range(4):
        assert np.array_equal(rots90[k].data.data, rots[(k + 1) % 4].data.data)


def test_sample_all_cells_covers_everything():
    img = ImageBuffer(np.random.default_rng(5).random((32, 32, 3)))
    t = ft.extract_hypercolumns(img, SPEC)
    for mode in ("random_uniform", "jittered_grid"):
        s = ft.sample_features(t, t.n_cells, mode, np.random.default_rng(0))
        flat = s.coords[:, 0] * t.grid_w + s.coords[:, 1]
        assert len(np.unique(flat)) == t.n_cells


def test_sample_no_duplicates():
    img = ImageBuffer(np.random.default_rng(6).random((64, 64, 3)))
    t = ft.extract_hypercolumns(img, SPEC)
    for mode in ("random_uniform", "jittered_grid"):
        for seed in range(5):
            s = ft.sample_features(t, 100, mode, np.random.default_rng(seed))
            flat = s.coords[:, 0] * t.grid_w + s.coords[:, 1]
            assert len(np.unique(flat)) == 100


def test_jittered_grid_structure_32x32_n16():
    # 4x4 lattice with stride 8 and one shared offset in [0, 8)^2
    img = ImageBuffer(np.random.default_rng(7).random((128, 128, 3)))
    t = ft.extract_hypercolumns(img, SPEC)
    assert (t.grid_h, t.grid_w) == (32, 32)
    s = ft.sample_features(t, 16, "jittered_grid", np.random.default_rng(3))
    rows = np.unique(s.coords[:, 0])
    cols = np.unique(s.coords[:, 1])
    assert len(rows) == 4 and len(cols) == 4
    assert np.all(np.diff(rows) == 8) and np.all(np.diff(cols) == 8)
    assert rows[0] < 8 and cols[0] < 8


def test_sampling_more_than_cells_rejected():
    img = ImageBuffer(np.random.default_rng(8).random((32, 32, 3)))
    t = ft.extract_hypercolumns(img, SPEC)
    with pytest.raises(ValueError):
        ft.sample_features(t, t.n_cells + 1, "random_uniform", np.random.default_rng(0))


def test_feature_file_round_trip(tmp_path):
    img = ImageBuffer(np.random.default_rng(9).random((32, 32, 3)))
    t = ft.extract_hypercolumns(img, SPEC)
    path = tmp_path / "f.feat"
    ft.save_features(t, path)
    back = ft.load_external_features(path)
    assert (back.grid_h, back.grid_w, back.dim) == (t.grid_h, t.grid_w, t.dim)
    assert np.abs(back.data.data - t.data.data).max() <= 1e-6  # float32 file payload


def test_feature_file_bad_magic(tmp_path):
    path = tmp_path / "bad.feat"
    path.write_bytes(b"NOPE!" + b"\x00" * 20)
    with pytest.raises(ft.FeatureFileError):
        ft.load_external_features(path)


def test_feature_file_truncated(tmp_path):
    img = ImageBuffer(np.random.default_rng(10).random((32, 32, 3)))
    t = ft.extract_hypercolumns(img, SPEC)
    path = tmp_path / "t.feat"
    ft.save_features(t, path)
    raw = path.read_bytes()
    path.write_bytes(raw[: len(raw) // 2])
    with pytest.raises(ft.FeatureFileError):
        ft.load_external_features(path)


def test_feature_file_zero_dims_rejected(tmp_path):
    import struct

    path = tmp_path / "z.feat"
    path.write_bytes(b"FEAT1" + struct.pack("<III", 0, 4, 4))
    with pytest.raises(ft.FeatureFileError):
        ft.load_external_features(path)


def test_extraction_differentiable_at_16px():
    rng = np.random.default_rng(3)
    x0 = rng.random((16, 16, 3))
    target = ft.extract_hypercolumns(ImageBuffer(rng.random((16, 16, 3))), SPEC).data.data

    def loss(x):
        feats = ft.extract_hypercolumns(x, SPEC)
        d = ad.sub(feats.data, ad.Tensor(target))
        return ad.tmean(ad.mul(d, d))

    err = ad.finite_diff_check(loss, x0, eps=1e-4, coords=np.arange(0, 768, 23))
    assert err <= 1e-3
