"""Deformable stylization: keypoint cleaning, spline warping, joint
optimization of image and deformation.

Correspondences arrive as (source, target, activation) triples; cleaning
greedily keeps high-activation pairs with a minimum source spacing, aligns
the target cloud with a least-squares similarity transform, and removes
pairs whose connecting segments cross.  A thin-plate spline fit from the
displaced keypoints back to their sources renders a dense inverse-sampling
flow field, through which the output image is differentiably warped.

The joint objective is

    alpha * L_content(C, O) + L_style(S, O) + L_style(S, W(O, theta))
        + beta * L_warp + gamma * R_TV

optimized over the output pyramid coefficients and the per-keypoint
displacements theta.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import autodiff as ad
from .features import FeatureSample, extract_hypercolumns, sample_features
from .gram import gram_style_loss, l2_content_loss
from .image import ImageBuffer, build_laplacian_pyramid, collapse_pyramid_tensors, resize_bilinear, resize_long_side
from .selfsim import content_loss
from .strotss import RmsProp, StrotssConfig, _ScaleContext, init_output
from .transport import cosine_distance_matrix, moment_loss, palette_loss, remd


DEFAULT_MIN_DIST = 10.0
DEFAULT_MAX_PAIRS = 80

# (beta, gamma) deformation regimes per base method
REGIMES = {
    "strotss": {"low": (0.3, 75.0), "med": (0.5, 50.0), "high": (0.7, 10.0)},
    "gram": {"low": (3.0, 750.0), "med": (7.0, 100.0), "high": (15.0, 100.0)},
}


@dataclass
class CorrespondenceSet:
    """Paired keypoints in the content frame, (row, col) pixels."""

    src: np.ndarray  # k x 2
    dst: np.ndarray  # k x 2
    activations: np.ndarray  # k

    def __post_init__(self):
        self.src = np.asarray(self.src, dtype=np.float64).reshape(-1, 2)
        self.dst = np.asarray(self.dst, dtype=np.float64).reshape(-1, 2)
        self.activations = np.asarray(self.activations, dtype=np.float64).reshape(-1)
        if not (len(self.src) == len(self.dst) == len(self.activations)):
            raise ValueError("source, target, and activation counts differ")
        if (self.activations < 0).any():
            raise ValueError("activations must be nonnegative")

    def __len__(self) -> int:
        return len(self.src)

    def take(self, idx) -> "CorrespondenceSet":
        return CorrespondenceSet(self.src[idx], self.dst[idx], self.activations[idx])


@dataclass
class TpsSolution:
    kernel_weights: np.ndarray  # k x 2
    affine: np.ndarray  # 2 x 2
    bias: np.ndarray  # 2
    control: np.ndarray  # k x 2 kernel centers


def clean_keypoints(
    raw: CorrespondenceSet,
    max_pairs: int = DEFAULT_MAX_PAIRS,
    min_dist: float = DEFAULT_MIN_DIST,
    min_activation: float = 0.0,
) -> CorrespondenceSet:
    """Greedy selection by descending activation with a source-spacing
    floor, a pair cap, and an activation threshold."""
    if len(raw) == 0:
        raise ValueError("no correspondences to clean")
    order = np.argsort(-raw.activations, kind="stable")
    kept: list[int] = []
    for i in order:
        if len(kept) >= max_pairs:
            break
        p = raw.src[i]
        if kept and np.min(np.linalg.norm(raw.src[kept] - p, axis=1)) < min_dist:
            continue
        kept.append(int(i))
    kept = [i for i in kept if raw.activations[i] >= min_activation]
    if not kept:
        raise ValueError("all correspondences filtered out")
    return raw.take(np.array(kept))


def align_umeyama(src: np.ndarray, dst: np.ndarray) -> tuple[float, np.ndarray, np.ndarray]:
    """Least-squares similarity transform (s, R, t) with s R src + t ~= dst."""
    src = np.asarray(src, dtype=np.float64)
    dst = np.asarray(dst, dtype=np.float64)
    if len(src) < 2:
        raise ValueError("alignment needs at least two points")
    mu_s, mu_d = src.mean(axis=0), dst.mean(axis=0)
    xs, xd = src - mu_s, dst - mu_d
    var_s = (xs**2).sum() / len(src)
    if var_s < 1e-12:
        raise ValueError("degenerate source cloud (all points coincide)")
    cov = xd.T @ xs / len(src)
    u, d, vt = np.linalg.svd(cov)
    s = np.eye(2)
    if np.linalg.det(u) * np.linalg.det(vt) < 0:
        s[1, 1] = -1.0
    rot = u @ s @ vt
    scale = np.trace(np.diag(d) @ s) / var_s
    t = mu_d - scale * rot @ mu_s
    return float(scale), rot, t


def align_targets(c: CorrespondenceSet, style_points: np.ndarray) -> CorrespondenceSet:
    """Map style-frame keypoints into the content frame via the similarity
    transform fitted from style points to content source points."""
    scale, rot, t = align_umeyama(style_points, c.src)
    mapped = style_points @ (scale * rot).T + t
    return CorrespondenceSet(c.src, mapped, c.activations)


def _proper_intersect(p1, p2, p3, p4) -> bool:
    """Strict interior crossing of segments p1-p2 and p3-p4; touching
    endpoints do not count."""

    def orient(a, b, c):
        return (b[1] - a[1]) * (c[0] - a[0]) - (b[0] - a[0]) * (c[1] - a[1])

    d1 = orient(p3, p4, p1)
    d2 = orient(p3, p4, p2)
    d3 = orient(p1, p2, p3)
    d4 = orient(p1, p2, p4)
    return ((d1 > 0) != (d2 > 0)) and ((d3 > 0) != (d4 > 0)) and all(
        abs(d) > 1e-12 for d in (d1, d2, d3, d4)
    )


def remove_crossings(c: CorrespondenceSet) -> CorrespondenceSet:
    """Drop the lower-activation pair of every crossing segment pair until
    none cross."""
    alive = list(range(len(c)))
    changed = True
    while changed:
        changed = False
        for ii in range(len(alive)):
            for jj in range(ii + 1, len(alive)):
                a, b = alive[ii], alive[jj]
                if _proper_intersect(c.src[a], c.dst[a], c.src[b], c.dst[b]):
                    drop = a if c.activations[a] <= c.activations[b] else b
                    alive.remove(drop)
                    changed = True
                    break
            if changed:
                break
    return c.take(np.array(alive))


def solve_tps(
    src: np.ndarray, dst: np.ndarray, reg: float = 0.0, kernel: str = "biharmonic"
) -> TpsSolution:
    """Interpolating spline f with f(src_i) = dst_i.

    ``biharmonic`` is the r^2 log r kernel.  ``squared`` uses the plain r^2
    kernel, which is affine-representable and therefore rank-deficient for
    more than a few points; it is only usable with Tikhonov regularization.
    """
    src = np.asarray(src, dtype=np.float64)
    dst = np.asarray(dst, dtype=np.float64)
    k = len(src)
    if k < 3:
        raise ValueError("spline needs at least three control points")
    if kernel == "squared" and reg <= 0.0:
        raise ValueError("the squared kernel requires Tikhonov regularization")
    d2 = ((src[:, None, :] - src[None, :, :]) ** 2).sum(axis=2)
    if kernel == "biharmonic":
        with np.errstate(divide="ignore", invalid="ignore"):
            kmat = np.where(d2 > 0, 0.5 * d2 * np.log(np.maximum(d2, 1e-300)), 0.0)
    elif kernel == "squared":
        kmat = d2
    else:
        raise ValueError(f"unknown kernel {kernel!r}")
    p = np.concatenate([np.ones((k, 1)), src], axis=1)
    lhs = np.zeros((k + 3, k + 3))
    lhs[:k, :k] = kmat + reg * np.eye(k)
    lhs[:k, k:] = p
    lhs[k:, :k] = p.T
    rhs = np.zeros((k + 3, 2))
    rhs[:k] = dst
    try:
        sol = np.linalg.solve(lhs, rhs)
    except np.linalg.LinAlgError as e:
        raise ValueError(f"singular spline system (collinear or duplicate points): {e}")
    return TpsSolution(sol[:k], sol[k + 1 :].T, sol[k], src.copy())


def tps_evaluate(sol: TpsSolution, queries: np.ndarray) -> np.ndarray:
    """Evaluate the fitted spline at query points (q x 2)."""
    d2 = ((queries[:, None, :] - sol.control[None, :, :]) ** 2).sum(axis=2)
    with np.errstate(divide="ignore", invalid="ignore"):
        u = np.where(d2 > 0, 0.5 * d2 * np.log(np.maximum(d2, 1e-300)), 0.0)
    return u @ sol.kernel_weights + queries @ sol.affine.T + sol.bias


def render_flow_field(sol: TpsSolution, h: int, w: int) -> np.ndarray:
    """Dense displacement grid: flow(q) = f(q) - q for every pixel q."""
    rr, cc = np.meshgrid(np.arange(h, dtype=np.float64), np.arange(w, dtype=np.float64), indexing="ij")
    q = np.stack([rr.reshape(-1), cc.reshape(-1)], axis=1)
    return (tps_evaluate(sol, q) - q).reshape(h, w, 2)


def _tps_flow_tensor(src_pts: np.ndarray, theta: ad.Tensor, h: int, w: int) -> ad.Tensor:
    """Differentiable flow: spline through the displaced keypoints back to
    their sources, evaluated on the pixel grid.

    Control points are dst = src + theta, values are the sources, so images
    can be sampled inversely through the resulting field.
    """
    k = len(src_pts)
    src_t = ad.Tensor(src_pts)
    dst = ad.add(src_t, theta)
    # pairwise squared distances between control points
    dsum = ad.tsum(ad.mul(dst, dst), axis=1)
    cross = ad.matmul(dst, ad.transpose(dst))
    d2 = ad.add(
        ad.sub(ad.reshape(dsum, (k, 1)), ad.mul(cross, 2.0)), ad.reshape(dsum, (1, k))
    )
    d2 = ad.mul(ad.add(d2, ad.absolute(d2)), 0.5)  # clamp negatives from cancellation
    kmat = ad.tps_kernel(d2)
    ones = ad.Tensor(np.ones((k, 1)))
    p = ad.concat([ones, dst], axis=1)
    top = ad.concat([kmat, p], axis=1)
    bottom = ad.concat([ad.transpose(p), ad.Tensor(np.zeros((3, 3)))], axis=1)
    lhs = ad.concat([top, bottom], axis=0)
    rhs = ad.concat([src_t, ad.Tensor(np.zeros((3, 2)))], axis=0)
    sol = ad.linear_solve(lhs, rhs)

    rr, cc = np.meshgrid(np.arange(h, dtype=np.float64), np.arange(w, dtype=np.float64), indexing="ij")
    q = np.stack([rr.reshape(-1), cc.reshape(-1)], axis=1)
    q2 = (q**2).sum(axis=1)
    qcross = ad.matmul(ad.Tensor(q), ad.transpose(dst))
    qd2 = ad.add(
        ad.sub(ad.Tensor(q2[:, None]), ad.mul(qcross, 2.0)),
        ad.reshape(dsum, (1, k)),
    )
    qd2 = ad.mul(ad.add(qd2, ad.absolute(qd2)), 0.5)
    uq = ad.tps_kernel(qd2)
    paug = ad.concat([ad.Tensor(np.ones((h * w, 1))), ad.Tensor(q)], axis=1)
    vals = ad.add(
        ad.matmul(uq, ad.gather_rows(sol, np.arange(k))),
        ad.matmul(paug, ad.gather_rows(sol, np.arange(k, k + 3))),
    )
    flow = ad.sub(vals, ad.Tensor(q))
    return ad.reshape(flow, (h, w, 2))


def warp_image(img, flow) -> ad.Tensor:
    """Inverse-sampled bilinear warp (differentiable in image and flow)."""
    return ad.warp_bilinear(ad.as_tensor(img), ad.as_tensor(flow))


def deformation_loss(c: CorrespondenceSet, theta) -> ad.Tensor:
    """Mean unsquared distance between the displaced sources and targets;
    exactly zero when every displacement reaches its target."""
    theta = ad.as_tensor(theta)
    if theta.shape != c.src.shape:
        raise ValueError("theta shape does not match the keypoint count")
    res = ad.sub(ad.Tensor(c.dst), ad.add(ad.Tensor(c.src), theta))
    return ad.tmean(ad.l2_norm_rows(res))


def tv_regularizer(flow) -> ad.Tensor:
    """Anisotropic total variation of the field, normalized by W x H.

    Neighbor differences are summed over whichever axes have length >= 2,
    so degenerate single-row or single-column fields are still defined.
    """
    flow = ad.as_tensor(flow)
    h, w = flow.shape[0], flow.shape[1]
    if h * w < 2:
        raise ValueError("flow field needs at least two pixels")
    total = ad.Tensor(0.0)
    if h >= 2:
        fr = ad.reshape(flow, (h, w * 2))
        dv = ad.sub(ad.gather_rows(fr, np.arange(1, h)), ad.gather_rows(fr, np.arange(0, h - 1)))
        total = ad.add(total, ad.tsum(ad.absolute(dv)))
    if w >= 2:
        fw = ad.reshape(ad.transpose(flow, (1, 0, 2)), (w, h * 2))
        dh = ad.sub(ad.gather_rows(fw, np.arange(1, w)), ad.gather_rows(fw, np.arange(0, w - 1)))
        total = ad.add(total, ad.tsum(ad.absolute(dh)))
    return ad.mul(total, 1.0 / (w * h))


@dataclass
class DstConfig:
    base: str = "strotss"  # "strotss" | "gram"
    alpha: float = 8.0
    beta: float = 0.5
    gamma: float = 50.0
    kernel: str = "biharmonic"
    theta_lr: float = 0.1
    base_config: StrotssConfig = field(default_factory=StrotssConfig)

    @classmethod
    def from_regime(cls, base: str, regime: str, **kw) -> "DstConfig":
        if base not in REGIMES:
            raise ValueError(f"unknown base method {base!r}")
        if regime not in REGIMES[base]:
            raise ValueError(f"unknown regime {regime!r}")
        beta, gamma = REGIMES[base][regime]
        return cls(base=base, beta=beta, gamma=gamma, **kw)


@dataclass
class DstResult:
    image: ImageBuffer
    unwarped: ImageBuffer
    theta: np.ndarray
    traces: list[list[float]]


def gram_base_layers(img_tensor, config: StrotssConfig):
    """Bank activations used by the gram base: the first layer of each block
    drives the style term, the first layer of the last block the content
    term."""
    from .features import build_filter_bank, _run_stack

    bank = build_filter_bank(config.bank)
    acts = _run_stack(ad.as_tensor(img_tensor), bank)
    firsts = []
    li = 0
    for n_layers, _ in bank.spec.blocks:
        firsts.append(acts[li])
        li += n_layers
    return firsts, firsts[-1]


class _GramScaleConstants:
    """Per-scale precomputed style Gram inputs and the content layer."""

    def __init__(self, ctx: _ScaleContext, config: StrotssConfig):
        s_style, _ = gram_base_layers(ad.Tensor(ctx.style.data), config)
        _, c_content = gram_base_layers(ad.Tensor(ctx.content.data), config)
        self.style_layers = [ad.Tensor(a.data) for a in s_style]
        self.content_layer = ad.Tensor(c_content.data)
        self.weights = [1.0 / (a.shape[2] ** 2) for a in s_style]


def dst_stylize(
    content: ImageBuffer,
    style: ImageBuffer,
    correspondences: CorrespondenceSet,
    config: DstConfig | None = None,
    steps: int | None = None,
    long_side: int | None = None,
    on_step: Callable[[dict], None] | None = None,
) -> DstResult:
    """Joint optimization of the stylized image and the deformation.

    Runs the multiscale schedule of the base configuration; theta is shared
    across scales and lives in the full-resolution frame, with per-scale
    flow fields rendered by coordinate scaling.  Returns the warped result.
    """
    config = config or DstConfig()
    base_cfg = config.base_config
    rng = np.random.default_rng(np.random.PCG64(base_cfg.seed))
    if len(correspondences) < 3:
        raise ValueError("need at least three keypoint pairs for the spline")

    theta = ad.Tensor(np.zeros_like(correspondences.src), requires_grad=True)
    out = init_output(content, style, long_side or base_cfg.coarsest_long_side)
    traces: list[list[float]] = []
    alphas = [config.alpha / 2.0**k for k in range(base_cfg.scales)] if config.base == "strotss" else [config.alpha] * base_cfg.scales

    full_h, full_w = content.height, content.width
    scales = base_cfg.scales
    for k in range(scales):
        side = (long_side or base_cfg.coarsest_long_side) * 2**k
        c_k = resize_long_side(content, side)
        s_k = resize_long_side(style, side)
        if (out.height, out.width) != (c_k.height, c_k.width):
            out = resize_bilinear(out, c_k.height, c_k.width)
        lr = base_cfg.final_scale_lr if k == scales - 1 and scales > 1 else base_cfg.lr
        n_steps = base_cfg.steps_per_scale if steps is None else steps
        out, trace = _dst_scale(
            out, c_k, s_k, correspondences, theta, alphas[k], config, n_steps, lr, rng,
            (full_h, full_w), on_step,
        )
        traces.append(trace)

    scale_y = out.height / full_h
    scale_x = out.width / full_w
    flow = _scaled_flow(correspondences, theta.data, out.height, out.width, scale_y, scale_x, config.kernel)
    warped = warp_image(ad.Tensor(out.data), ad.Tensor(flow)).data
    return DstResult(
        ImageBuffer(np.clip(warped, 0.0, 1.0)),
        ImageBuffer(np.clip(out.data, 0.0, 1.0)),
        theta.data.copy(),
        traces,
    )


def _scaled_flow(c: CorrespondenceSet, theta: np.ndarray, h, w, sy, sx, kernel) -> np.ndarray:
    src = c.src * np.array([sy, sx])
    dst = (c.src + theta) * np.array([sy, sx])
    sol = solve_tps(dst, src, reg=0.0 if kernel == "biharmonic" else 1e-6, kernel=kernel)
    return render_flow_field(sol, h, w)


def _dst_scale(
    output: ImageBuffer,
    content: ImageBuffer,
    style: ImageBuffer,
    corr: CorrespondenceSet,
    theta: ad.Tensor,
    alpha: float,
    config: DstConfig,
    steps: int,
    lr: float,
    rng: np.random.Generator,
    full_hw: tuple[int, int],
    on_step: Callable[[dict], None] | None,
) -> tuple[ImageBuffer, list[float]]:
    base_cfg = config.base_config
    ctx = _ScaleContext(content, style, base_cfg)
    n_levels = min(base_cfg.pyramid_levels, int(np.log2(min(output.height, output.width))) + 1)
    pyr = build_laplacian_pyramid(output, n_levels)
    params = [ad.Tensor(lv.copy(), requires_grad=True) for lv in pyr.levels]
    opt = RmsProp(params, lr, base_cfg.rmsprop_decay, base_cfg.rmsprop_eps)
    opt_theta = RmsProp([theta], config.theta_lr, base_cfg.rmsprop_decay, base_cfg.rmsprop_eps)
    sy = content.height / full_hw[0]
    sx = content.width / full_hw[1]
    src_scaled = corr.src * np.array([sy, sx])
    scale_vec = ad.Tensor(np.array([[sy, sx]]))
    gram_consts = _GramScaleConstants(ctx, base_cfg) if config.base == "gram" else None

    n = min(base_cfg.samples, ctx.c_tensor.n_cells)
    m = min(base_cfg.samples, ctx.s_tensor.n_cells)
    trace: list[float] = []
    for step in range(steps):
        img = collapse_pyramid_tensors(params)
        theta_scaled = ad.mul(theta, scale_vec)
        flow = _tps_flow_tensor(src_scaled, theta_scaled, content.height, content.width)
        warped = ad.warp_bilinear(img, flow)

        loss = dst_objective(
            img, warped, flow, ctx, corr, theta, alpha, config, n, m, rng, gram_consts
        )
        loss.backward()
        opt.step()
        opt_theta.step()
        trace.append(float(loss.data))
        if on_step is not None:
            on_step({"step": step, "loss": float(loss.data), "image": warped.data})
    final = collapse_pyramid_tensors(params)
    return ImageBuffer(final.data, output.colorspace), trace


def dst_objective(
    img: ad.Tensor,
    warped: ad.Tensor,
    flow: ad.Tensor,
    ctx: _ScaleContext,
    corr: CorrespondenceSet,
    theta: ad.Tensor,
    alpha: float,
    config: DstConfig,
    n: int,
    m: int,
    rng: np.random.Generator,
    gram_consts: "_GramScaleConstants | None" = None,
) -> ad.Tensor:
    """Full joint objective at one step."""
    l_warp = deformation_loss(corr, theta)
    r_tv = tv_regularizer(flow)
    if config.base == "gram":
        consts = gram_consts or _GramScaleConstants(ctx, config.base_config)
        o_style, o_content = gram_base_layers(img, config.base_config)
        w_style, _ = gram_base_layers(warped, config.base_config)
        l_c = l2_content_loss(o_content, consts.content_layer)
        l_s = gram_style_loss(o_style, consts.style_layers, consts.weights)
        l_sw = gram_style_loss(w_style, consts.style_layers, consts.weights)
    else:
        l_c, l_s = _strotss_terms(img, ctx, alpha, n, m, rng)
        _, l_sw = _strotss_terms(warped, ctx, alpha, n, m, rng, content_term=False)
    total = ad.add(
        ad.add(ad.mul(l_c, alpha), ad.add(l_s, l_sw)),
        ad.add(ad.mul(l_warp, config.beta), ad.mul(r_tv, config.gamma)),
    )
    return total


def _strotss_terms(img, ctx, alpha, n, m, rng, content_term: bool = True):
    feats = extract_hypercolumns(img, ctx.bank)
    c_sample = sample_features(ctx.c_tensor, n, "jittered_grid", rng)
    c_flat = c_sample.coords[:, 0] * ctx.c_tensor.grid_w + c_sample.coords[:, 1]
    s_flat = np.sort(rng.choice(ctx.s_tensor.n_cells, size=m, replace=False))
    o_feats = FeatureSample(c_sample.coords, ad.gather_rows(feats.data, c_flat))
    s_vec = ad.Tensor(ctx.s_tensor.data.data[s_flat])
    l_s = ad.add(
        remd(cosine_distance_matrix(o_feats.vectors, s_vec)),
        moment_loss(o_feats.vectors, s_vec),
    )
    o_grid = ad.resize_bilinear(img, ctx.c_tensor.grid_h, ctx.c_tensor.grid_w)
    o_pix = ad.gather_rows(ad.reshape(o_grid, (ctx.c_tensor.n_cells, 3)), c_flat)
    l_s = ad.add(l_s, ad.mul(palette_loss(o_pix, ad.Tensor(ctx.s_pixels[s_flat])), 1.0 / alpha))
    if not content_term:
        return None, l_s
    c_feats = ad.Tensor(ctx.c_tensor.data.data[c_flat])
    l_c = content_loss(o_feats.vectors, c_feats)
    return l_c, l_s


# correspondence files: one pair per line, "sy sx ty tx activation"


def load_correspondences(path) -> CorrespondenceSet:
    rows = []
    with open(path) as fh:
        for ln, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.replace(",", " ").split()
            if len(parts) not in (4, 5):
                raise ValueError(f"{path}:{ln}: expected 4 or 5 numbers, got {len(parts)}")
            vals = [float(p) for p in parts]
            act = vals[4] if len(vals) == 5 else 1.0
            rows.append((vals[0], vals[1], vals[2], vals[3], act))
    if not rows:
        raise ValueError(f"{path}: no correspondence rows")
    arr = np.asarray(rows)
    return CorrespondenceSet(arr[:, 0:2], arr[:, 2:4], arr[:, 4])


def save_correspondences(c: CorrespondenceSet, path) -> None:
    with open(path, "w") as fh:
        fh.write("# sy sx ty tx activation\n")
        for s, d, a in zip(c.src, c.dst, c.activations):
            fh.write(f"{s[0]:.3f} {s[1]:.3f} {d[0]:.3f} {d[1]:.3f} {a:.6f}\n")


def prepare_correspondences(
    raw: CorrespondenceSet,
    align: bool = True,
    max_pairs: int = DEFAULT_MAX_PAIRS,
    min_dist: float = DEFAULT_MIN_DIST,
) -> CorrespondenceSet:
    """Cleaning pipeline: greedy spacing selection, similarity alignment of
    the targets, crossing removal."""
    cleaned = clean_keypoints(raw, max_pairs=max_pairs, min_dist=min_dist)
    if align and len(cleaned) >= 2:
        cleaned = align_targets(cleaned, cleaned.dst)
    return remove_crossings(cleaned)
