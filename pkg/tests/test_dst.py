import numpy as np
import pytest

from stylecore import autodiff as ad
from stylecore import dst
from stylecore.image import ImageBuffer
from stylecore.strotss import StrotssConfig
from stylecore.synth import shapes, textured


def cs(src, dstp, act=None):
    src = np.asarray(src, dtype=float)
    act = act if act is not None else np.ones(len(src))
    return dst.CorrespondenceSet(src, np.asarray(dstp, dtype=float), act)


# ---- cleaning ---------------------------------------------------------------


def test_clean_spacing_rule_keeps_higher_activation():
    raw = cs([[10, 10], [12, 10]], [[11, 11], [13, 10]], [0.5, 0.9])
    out = dst.clean_keypoints(raw, min_dist=10)
    assert len(out) == 1
    assert out.src[0].tolist() == [12, 10]


def test_clean_cap_at_max_pairs(rng):
    # 100 well-spaced points on a 10x10 lattice with 20 px spacing
    pts = np.array([[20 * i, 20 * j] for i in range(10) for j in range(10)], dtype=float)
    raw = cs(pts, pts + 1, rng.random(100))
    out = dst.clean_keypoints(raw, max_pairs=80, min_dist=10)
    assert len(out) == 80


def test_clean_single_pair_unchanged():
    raw = cs([[5, 5]], [[6, 6]], [0.4])
    out = dst.clean_keypoints(raw)
    assert len(out) == 1 and out.activations[0] == 0.4


def test_clean_activation_threshold():
    raw = cs([[0, 0], [50, 50]], [[1, 1], [51, 51]], [0.9, 0.05])
    out = dst.clean_keypoints(raw, min_activation=0.1)
    assert len(out) == 1


def test_clean_all_filtered_is_error():
    raw = cs([[0, 0]], [[1, 1]], [0.0])
    with pytest.raises(ValueError):
        dst.clean_keypoints(raw, min_activation=0.5)


# ---- alignment --------------------------------------------------------------


def test_umeyama_identity(rng):
    pts = rng.random((8, 2)) * 40
    s, rot, t = dst.align_umeyama(pts, pts)
    assert s == pytest.approx(1.0, abs=1e-12)
    assert np.abs(rot - np.eye(2)).max() <= 1e-12
    assert np.abs(t).max() <= 1e-10


def test_umeyama_recovers_similarity(rng):
    pts = rng.random((10, 2)) * 50
    ang = np.deg2rad(30)
    rot_true = np.array([[np.cos(ang), -np.sin(ang)], [np.sin(ang), np.cos(ang)]])
    mapped = 1.5 * pts @ rot_true.T + np.array([4.0, -2.0])
    s, rot, t = dst.align_umeyama(pts, mapped)
    assert abs(s - 1.5) <= 1e-6
    assert np.abs(rot - rot_true).max() <= 1e-6
    assert np.abs(t - [4.0, -2.0]).max() <= 1e-6


def test_umeyama_two_point_minimal_case():
    src = np.array([[0.0, 0.0], [1.0, 0.0]])
    dstp = np.array([[2.0, 1.0], [2.0, 3.0]])
    s, rot, t = dst.align_umeyama(src, dstp)
    assert np.abs(src @ (s * rot).T + t - dstp).max() <= 1e-9


def test_umeyama_degenerate_cloud_rejected():
    pts = np.zeros((3, 2))
    with pytest.raises(ValueError):
        dst.align_umeyama(pts, pts + 1)


# ---- crossings --------------------------------------------------------------


def test_crossing_removed_lower_activation():
    pairs = cs([[0, 0], [0, 10]], [[10, 10], [10, 0]], [1.0, 0.5])
    out = dst.remove_crossings(pairs)
    assert len(out) == 1 and out.activations[0] == 1.0


def test_parallel_pairs_kept():
    pairs = cs([[0, 0], [0, 10]], [[5, 0], [5, 10]], [1.0, 1.0])
    assert len(dst.remove_crossings(pairs)) == 2


def test_touching_endpoints_kept():
    pairs = cs([[0, 0], [10, 10]], [[5, 5], [5, 5]], [1.0, 0.5])
    assert len(dst.remove_crossings(pairs)) == 2


def test_iterative_removal_until_none_cross():
    # three segments where removing one still leaves a crossing pair
    pairs = cs(
        [[0, 0], [0, 8], [4, 0]],
        [[8, 8], [8, 0], [4, 12]],
        [3.0, 2.0, 1.0],
    )
    out = dst.remove_crossings(pairs)
    for i in range(len(out)):
        for j in range(i + 1, len(out)):
            assert not dst._proper_intersect(out.src[i], out.dst[i], out.src[j], out.dst[j])


# ---- spline -----------------------------------------------------------------


def test_tps_identity_is_identity(rng):
    src = rng.random((6, 2)) * 30
    sol = dst.solve_tps(src, src)
    assert np.abs(sol.kernel_weights).max() <= 1e-9
    assert np.abs(sol.affine - np.eye(2)).max() <= 1e-9
    assert np.abs(sol.bias).max() <= 1e-9


def test_tps_pure_translation(rng):
    src = rng.random((5, 2)) * 30
    sol = dst.solve_tps(src, src + np.array([5.0, 0.0]))
    assert np.abs(sol.kernel_weights).max() <= 1e-9
    q = rng.random((50, 2)) * 30
    assert np.abs(dst.tps_evaluate(sol, q) - (q + [5.0, 0.0])).max() <= 1e-9


def test_tps_interpolates_keypoints(rng):
    src = rng.random((4, 2)) * 20
    tgt = rng.random((4, 2)) * 20
    sol = dst.solve_tps(src, tgt)
    assert np.abs(dst.tps_evaluate(sol, src) - tgt).max() <= 1e-6


def test_tps_side_conditions(rng):
    src = rng.random((7, 2)) * 25
    tgt = rng.random((7, 2)) * 25
    sol = dst.solve_tps(src, tgt)
    assert np.abs(sol.kernel_weights.sum(axis=0)).max() <= 1e-9
    moments = (sol.kernel_weights[:, :, None] * sol.control[:, None, :]).sum(axis=0)
    assert np.abs(moments).max() <= 1e-9


def test_tps_affine_exactness_for_similarity(rng):
    src = rng.random((6, 2)) * 30
    ang = np.deg2rad(25)
    rot = np.array([[np.cos(ang), -np.sin(ang)], [np.sin(ang), np.cos(ang)]])
    tgt = 1.3 * src @ rot.T + [1.0, 2.0]
    sol = dst.solve_tps(src, tgt)
    assert np.abs(sol.kernel_weights).max() <= 1e-9


def test_tps_degenerate_points_rejected():
    src = np.array([[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]])  # collinear
    with pytest.raises(ValueError):
        dst.solve_tps(src, src + 1)


def test_tps_paper_literal_kernel_needs_regularization(rng):
    src = rng.random((6, 2)) * 30
    tgt = rng.random((6, 2)) * 30
    with pytest.raises(ValueError):
        dst.solve_tps(src, tgt, kernel="squared")
    sol = dst.solve_tps(src, tgt, reg=1e-6, kernel="squared")
    assert np.all(np.isfinite(sol.kernel_weights))


# ---- flow and warp ----------------------------------------------------------


def test_flow_identity_solution_zero(rng):
    src = rng.random((5, 2)) * 20
    sol = dst.solve_tps(src, src)
    flow = dst.render_flow_field(sol, 24, 24)
    assert np.abs(flow).max() <= 1e-7


def test_flow_translation_constant(rng):
    src = rng.random((5, 2)) * 20
    sol = dst.solve_tps(src, src + [2.0, -1.0])
    flow = dst.render_flow_field(sol, 24, 24)
    assert np.abs(flow - np.array([2.0, -1.0])).max() <= 1e-7


def test_flow_hits_keypoints(rng):
    src = (rng.random((4, 2)) * 20).round()
    tgt = rng.random((4, 2)) * 20
    sol = dst.solve_tps(src, tgt)
    flow = dst.render_flow_field(sol, 24, 24)
    for p, q in zip(src.astype(int), tgt):
        assert np.abs(flow[p[0], p[1]] + p - q).max() <= 1e-6


def test_warp_zero_flow_identity(rng):
    img = rng.random((12, 12, 3))
    out = dst.warp_image(img, np.zeros((12, 12, 2)))
    assert np.array_equal(out.data, img)


def test_warp_integer_shift_exact(rng):
    ramp = np.tile(np.arange(20.0)[:, None, None], (1, 20, 1))
    flow = np.zeros((20, 20, 2))
    flow[:, :, 0] = 3.0
    out = dst.warp_image(ramp, flow).data
    assert np.abs(out[3:17, 3:17] - (ramp[3:17, 3:17] + 3)).max() <= 1e-12


def test_warp_flow_gradient_fd(rng):
    img = ad.Tensor(rng.random((8, 8, 2)))

    def f(flow):
        return ad.tsum(ad.mul(ad.warp_bilinear(img, flow), img))

    flow0 = rng.random((8, 8, 2)) * 0.5 + 0.13
    assert ad.finite_diff_check(f, flow0, eps=1e-4) <= 1e-3


# ---- losses -----------------------------------------------------------------


def test_deformation_loss_zero_at_targets():
    pairs = cs([[0, 0], [5, 5]], [[3, 4], [6, 6]])
    theta = pairs.dst - pairs.src
    assert float(dst.deformation_loss(pairs, theta).data) == 0.0


def test_deformation_loss_3_4_5():
    pairs = cs([[0, 0]], [[3, 4]])
    assert float(dst.deformation_loss(pairs, np.zeros((1, 2))).data) == pytest.approx(5.0)


def test_deformation_loss_homogeneous(rng):
    pairs = cs(rng.random((6, 2)) * 10, rng.random((6, 2)) * 10)
    base = float(dst.deformation_loss(pairs, np.zeros((6, 2))).data)
    doubled = dst.CorrespondenceSet(pairs.src, pairs.src + 2 * (pairs.dst - pairs.src), pairs.activations)
    assert float(dst.deformation_loss(doubled, np.zeros((6, 2))).data) == pytest.approx(2 * base)


def test_tv_constant_zero():
    assert float(dst.tv_regularizer(np.full((5, 7, 2), 3.3)).data) == 0.0


def test_tv_hand_case_2x1():
    f = np.zeros((2, 1, 2))
    f[1, 0, 0] = 1.0
    assert float(dst.tv_regularizer(f).data) == pytest.approx(0.5)


def test_tv_absolute_homogeneity(rng):
    f = rng.normal(size=(6, 6, 2))
    base = float(dst.tv_regularizer(f).data)
    assert float(dst.tv_regularizer(-2.0 * f).data) == pytest.approx(2 * base)


# ---- joint objective --------------------------------------------------------


def _small_instance():
    content = textured(21, 32, 32)
    style = shapes(22, 32, 32)
    corr = cs(
        [[8.0, 8.0], [8.0, 24.0], [24.0, 8.0], [24.0, 24.0]],
        [[10.0, 9.0], [7.0, 25.0], [25.0, 7.0], [22.0, 22.0]],
    )
    return content, style, corr


def test_joint_objective_theta_gradient_fd():
    content, style, corr = _small_instance()
    cfg = dst.DstConfig(base="strotss", alpha=4.0, beta=0.5, gamma=10.0,
                        base_config=StrotssConfig(samples=64, seed=0))
    from stylecore.strotss import _ScaleContext

    ctx = _ScaleContext(content, style, cfg.base_config)
    theta0 = np.array([[0.4, -0.3], [0.2, 0.1], [-0.3, 0.2], [0.1, 0.4]])

    def f(th):
        r = np.random.default_rng(7)
        img = ad.Tensor(content.data)
        flow = dst._tps_flow_tensor(corr.src, th, 32, 32)
        warped = ad.warp_bilinear(img, flow)
        return dst.dst_objective(img, warped, flow, ctx, corr, th, 4.0, cfg, 64, 64, r)

    assert ad.finite_diff_check(f, theta0, eps=1e-4) <= 1e-3


def test_joint_objective_gram_base_theta_gradient_fd():
    content, style, corr = _small_instance()
    cfg = dst.DstConfig(base="gram", alpha=1.0, beta=0.5, gamma=10.0,
                        base_config=StrotssConfig(samples=64, seed=0))
    from stylecore.strotss import _ScaleContext

    ctx = _ScaleContext(content, style, cfg.base_config)
    theta0 = np.array([[0.3, -0.2], [0.25, 0.15], [-0.35, 0.2], [0.15, 0.3]])

    def f(th):
        r = np.random.default_rng(3)
        img = ad.Tensor(content.data)
        flow = dst._tps_flow_tensor(corr.src, th, 32, 32)
        warped = ad.warp_bilinear(img, flow)
        return dst.dst_objective(img, warped, flow, ctx, corr, th, 1.0, cfg, 64, 64, r)

    assert ad.finite_diff_check(f, theta0, eps=1e-4) <= 1e-3


def test_dst_descends_and_returns_warped():
    content, style, corr = _small_instance()
    cfg = dst.DstConfig(
        base="strotss", alpha=4.0, beta=0.5, gamma=10.0,
        base_config=StrotssConfig(scales=1, steps_per_scale=60, samples=64, seed=0),
    )
    res = dst.dst_stylize(content, style, corr, cfg, long_side=32)
    assert res.image.data.shape == (32, 32, 3)
    trace = res.traces[0]
    assert trace[-1] < trace[0]
    assert np.abs(res.theta).max() > 0  # the deformation actually moved


def test_regime_presets():
    assert dst.REGIMES["strotss"]["low"] == (0.3, 75.0)
    assert dst.REGIMES["strotss"]["med"] == (0.5, 50.0)
    assert dst.REGIMES["strotss"]["high"] == (0.7, 10.0)
    assert dst.REGIMES["gram"]["low"] == (3.0, 750.0)
    assert dst.REGIMES["gram"]["med"] == (7.0, 100.0)
    assert dst.REGIMES["gram"]["high"] == (15.0, 100.0)
    cfg = dst.DstConfig.from_regime("strotss", "low")
    assert (cfg.beta, cfg.gamma) == (0.3, 75.0)
    with pytest.raises(ValueError):
        dst.DstConfig.from_regime("strotss", "extreme")


def test_correspondence_file_round_trip(tmp_path, rng):
    c = cs(rng.random((5, 2)) * 30, rng.random((5, 2)) * 30, rng.random(5))
    path = tmp_path / "points.txt"
    dst.save_correspondences(c, path)
    back = dst.load_correspondences(path)
    assert np.abs(back.src - c.src).max() <= 1e-3
    assert np.abs(back.activations - c.activations).max() <= 1e-6


def test_correspondence_file_errors(tmp_path):
    p = tmp_path / "bad.txt"
    p.write_text("1 2 3\n")
    with pytest.raises(ValueError):
        dst.load_correspondences(p)
    p.write_text("# only comments\n")
    with pytest.raises(ValueError):
        dst.load_correspondences(p)
