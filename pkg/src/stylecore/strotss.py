"""Multiscale transport-based stylization.

At each scale the output image is parameterized as a Laplacian pyramid whose
coefficients are optimized with RMSprop.  The per-step objective combines a
self-similarity content term, a relaxed-transport style term over cosine
costs (optionally reshaped by user guidance), a moment-matching term, and a
palette term over pixel colors:

    (alpha * l_C + l_m + l_r + (1/alpha) * l_p) / (2 + alpha + 1/alpha)

The content-weight alpha is halved before every scale, so the default 16.0
reaches 1.0 at the last of four scales.  Coordinates are re-sampled fresh at
every step: a jittered grid on the content/output side, uniform random cells
on the style side.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import autodiff as ad
from .features import FeatureSample, FeatureTensor, FilterBankSpec, extract_hypercolumns, sample_features
from .image import ImageBuffer, build_laplacian_pyramid, collapse_pyramid_tensors, resize_bilinear, resize_long_side
from .selfsim import content_loss
from .transport import (
    DistanceMatrix,
    apply_guidance_costs,
    cosine_distance_matrix,
    expand_point_guidance,
    moment_loss,
    palette_loss,
    remd,
)


@dataclass
class StrotssConfig:
    alpha: float = 16.0
    scales: int = 4
    coarsest_long_side: int = 64
    steps_per_scale: int = 200
    lr: float = 0.002
    final_scale_lr: float = 0.001
    samples: int = 1024
    pyramid_levels: int = 5
    rmsprop_decay: float = 0.99
    rmsprop_eps: float = 1e-8
    seed: int = 0
    bank: FilterBankSpec = field(default_factory=FilterBankSpec)

    def __post_init__(self):
        if self.alpha <= 0:
            raise ValueError("alpha must be positive")
        if self.scales < 1:
            raise ValueError("need at least one scale")

    def scale_alphas(self) -> list[float]:
        """Content weight per scale; halved before each scale including the
        first, so the default reaches 1.0 on the final scale."""
        return [self.alpha / 2.0 ** (k + 1) for k in range(self.scales)]


@dataclass
class GuidanceSpec:
    """Region and point pairings in original-image pixel coordinates."""

    region_pairs: list[tuple[np.ndarray, np.ndarray]] = field(default_factory=list)
    point_pairs: list[tuple[tuple[float, float], tuple[float, float]]] = field(default_factory=list)
    beta: float = 5.0
    spacing: float = 20.0

    def validate(self, content_hw: tuple[int, int], style_hw: tuple[int, int]) -> None:
        for k, (cm, sm) in enumerate(self.region_pairs):
            if cm.shape[:2] != content_hw:
                raise ValueError(f"region {k}: content mask {cm.shape[:2]} != image {content_hw}")
            if sm.shape[:2] != style_hw:
                raise ValueError(f"region {k}: style mask {sm.shape[:2]} != image {style_hw}")
            if not cm.any() or not sm.any():
                raise ValueError(f"region {k}: masks must be nonempty on both sides")
        for k, (cp, sp) in enumerate(self.point_pairs):
            if not (0 <= cp[0] < content_hw[0] and 0 <= cp[1] < content_hw[1]):
                raise ValueError(f"point {k}: content coordinate {cp} out of bounds")
            if not (0 <= sp[0] < style_hw[0] and 0 <= sp[1] < style_hw[1]):
                raise ValueError(f"point {k}: style coordinate {sp} out of bounds")

    def is_empty(self) -> bool:
        return not self.region_pairs and not self.point_pairs


def _mask_to_grid(mask: np.ndarray, hw: tuple[int, int], grid_hw: tuple[int, int]) -> np.ndarray:
    """Rescale a pixel mask to scale dims, then mark grid cells covering any
    in-region pixel."""
    m = (np.asarray(mask) != 0).astype(np.float64)[:, :, None]
    scaled = resize_bilinear(ImageBuffer(m), hw[0], hw[1]).data[:, :, 0] > 0.25
    gh, gw = grid_hw
    out = np.zeros((gh, gw), dtype=bool)
    for r in range(gh):
        for c in range(gw):
            out[r, c] = scaled[4 * r : 4 * r + 4, 4 * c : 4 * c + 4].any()
    if not out.any():
        # region smaller than a grid cell at this scale: keep its centroid
        ys, xs = np.nonzero(m[:, :, 0])
        r = min(int(ys.mean() * hw[0] / m.shape[0]) // 4, gh - 1)
        c = min(int(xs.mean() * hw[1] / m.shape[1]) // 4, gw - 1)
        out[r, c] = True
    return out


def resolve_guidance(
    g: GuidanceSpec,
    content_orig_hw: tuple[int, int],
    style_orig_hw: tuple[int, int],
    content_hw: tuple[int, int],
    style_hw: tuple[int, int],
    content_grid: tuple[int, int],
    style_grid: tuple[int, int],
) -> list[tuple[np.ndarray, np.ndarray]]:
    """Grid-cell mask pairs for the current scale (regions plus expanded
    point lattices)."""
    pairs: list[tuple[np.ndarray, np.ndarray]] = []
    for cm, sm in g.region_pairs:
        pairs.append(
            (_mask_to_grid(cm, content_hw, content_grid), _mask_to_grid(sm, style_hw, style_grid))
        )
    if g.point_pairs:
        singles = expand_point_guidance(g.point_pairs, g.spacing, content_orig_hw, style_orig_hw)
        cy = content_hw[0] / content_orig_hw[0]
        cx = content_hw[1] / content_orig_hw[1]
        sy = style_hw[0] / style_orig_hw[0]
        sx = style_hw[1] / style_orig_hw[1]
        for (pcy, pcx), (psy, psx) in singles:
            cmask = np.zeros(content_grid, dtype=bool)
            smask = np.zeros(style_grid, dtype=bool)
            r = min(int(pcy * cy) // 4, content_grid[0] - 1)
            c = min(int(pcx * cx) // 4, content_grid[1] - 1)
            cmask[r, c] = True
            r = min(int(psy * sy) // 4, style_grid[0] - 1)
            c = min(int(psx * sx) // 4, style_grid[1] - 1)
            smask[r, c] = True
            pairs.append((cmask, smask))
    return pairs


def init_output(content: ImageBuffer, style: ImageBuffer, long_side: int) -> ImageBuffer:
    """Content high frequencies over the style's mean color."""
    small = resize_long_side(content, long_side)
    pyr = build_laplacian_pyramid(small, 2)
    band = pyr.levels[0]
    mean_color = style.data.reshape(-1, style.channels).mean(axis=0)
    return ImageBuffer(band + mean_color[None, None, :], content.colorspace)


def total_loss(
    o_feats: FeatureSample,
    c_feats: FeatureSample,
    s_feats: FeatureSample,
    o_pixels: ad.Tensor,
    s_pixels: ad.Tensor,
    alpha: float,
    guidance_pairs: list[tuple[np.ndarray, np.ndarray]] | None = None,
    beta: float = 5.0,
    diagnostics: dict | None = None,
) -> ad.Tensor:
    """The combined objective at one step; rows of o/c samples are paired."""
    l_c = content_loss(o_feats, c_feats)
    cost = cosine_distance_matrix(o_feats, s_feats)
    if guidance_pairs:
        cost = apply_guidance_costs(cost, guidance_pairs, beta)
    selections: list = []
    l_r = remd(cost, selections)
    l_m = moment_loss(o_feats, s_feats)
    l_p = palette_loss(o_pixels, s_pixels)
    if diagnostics is not None:
        diagnostics["l_c"] = float(l_c.data)
        diagnostics["l_r"] = float(l_r.data)
        diagnostics["l_m"] = float(l_m.data)
        diagnostics["l_p"] = float(l_p.data)
        diagnostics["selections"] = selections[0]
        diagnostics["forbidden"] = cost.forbidden
        diagnostics["guidance_conflicts"] = cost.guidance_conflicts
        scaled = sum(int(r.sum()) * int(c.sum()) for r, c in (guidance_pairs or []))
        if cost.forbidden is not None:
            rows, cols = selections[0]
            n, m = cost.forbidden.shape
            diagnostics["forbidden_hits"] = int(
                cost.forbidden[np.arange(n), rows].sum() + cost.forbidden[cols, np.arange(m)].sum()
            )
            diagnostics["guidance_entries"] = int(cost.forbidden.sum()) + scaled
        else:
            diagnostics["forbidden_hits"] = 0
            diagnostics["guidance_entries"] = scaled
    num = ad.add(
        ad.add(ad.mul(l_c, alpha), l_m), ad.add(l_r, ad.mul(l_p, 1.0 / alpha))
    )
    return ad.mul(num, 1.0 / (2.0 + alpha + 1.0 / alpha))


class RmsProp:
    def __init__(self, params: list[ad.Tensor], lr: float, decay: float, eps: float):
        self.params = params
        self.lr, self.decay, self.eps = lr, decay, eps
        self.state = [np.zeros_like(p.data) for p in params]

    def step(self) -> None:
        for p, v in zip(self.params, self.state):
            if p.grad is None:
                continue
            v *= self.decay
            v += (1.0 - self.decay) * p.grad * p.grad
            p.data -= self.lr * p.grad / (np.sqrt(v) + self.eps)
            p.grad = None


class _ScaleContext:
    """Constant per-scale data: content/style features and grid pixels."""

    def __init__(self, content: ImageBuffer, style: ImageBuffer, config: StrotssConfig):
        if content.channels != 3 or style.channels != 3:
            raise ValueError("stylization expects 3-channel content and style images")
        self.content = content
        self.style = style
        self.bank = config.bank
        self.c_tensor = extract_hypercolumns(content, config.bank)
        self.s_tensor = extract_hypercolumns(style, config.bank)
        self.c_pixels = resize_bilinear(content, self.c_tensor.grid_h, self.c_tensor.grid_w).data.reshape(-1, 3)
        self.s_pixels = resize_bilinear(style, self.s_tensor.grid_h, self.s_tensor.grid_w).data.reshape(-1, 3)


def _augment_style_sample(flat: np.ndarray, pairs, style_grid: tuple[int, int]) -> np.ndarray:
    """Guarantee every style guidance region contributes a sampled column,
    so no constrained row ends up fully forbidden."""
    if not pairs:
        return flat
    extra = []
    have = set(flat.tolist())
    for _, smask in pairs:
        cells = np.flatnonzero(smask.reshape(-1))
        if cells.size and not any(c in have for c in cells.tolist()):
            extra.append(cells[0])
            have.add(cells[0])
    if extra:
        flat = np.concatenate([flat, np.asarray(extra, dtype=flat.dtype)])
    return flat


def stylize_scale(
    output: ImageBuffer,
    content: ImageBuffer,
    style: ImageBuffer,
    alpha: float,
    config: StrotssConfig,
    rng: np.random.Generator,
    steps: int | None = None,
    lr: float | None = None,
    guidance: GuidanceSpec | None = None,
    guidance_orig_dims: tuple[tuple[int, int], tuple[int, int]] | None = None,
    on_step: Callable[[dict], None] | None = None,
) -> tuple[ImageBuffer, list[float]]:
    """Optimize one scale; returns the collapsed image and the loss trace."""
    steps = config.steps_per_scale if steps is None else steps
    lr = config.lr if lr is None else lr
    ctx = _ScaleContext(content, style, config)
    n_levels = min(config.pyramid_levels, int(np.log2(min(output.height, output.width))) + 1)
    pyr = build_laplacian_pyramid(output, n_levels)
    params = [ad.Tensor(lv.copy(), requires_grad=True) for lv in pyr.levels]
    opt = RmsProp(params, lr, config.rmsprop_decay, config.rmsprop_eps)

    pairs: list[tuple[np.ndarray, np.ndarray]] = []
    if guidance is not None and not guidance.is_empty():
        c_orig, s_orig = guidance_orig_dims or (
            (content.height, content.width),
            (style.height, style.width),
        )
        pairs = resolve_guidance(
            guidance,
            c_orig,
            s_orig,
            (content.height, content.width),
            (style.height, style.width),
            (ctx.c_tensor.grid_h, ctx.c_tensor.grid_w),
            (ctx.s_tensor.grid_h, ctx.s_tensor.grid_w),
        )

    n = min(config.samples, ctx.c_tensor.n_cells)
    m = min(config.samples, ctx.s_tensor.n_cells)
    trace: list[float] = []
    for step in range(steps):
        c_sample = sample_features(ctx.c_tensor, n, "jittered_grid", rng)
        c_flat = c_sample.coords[:, 0] * ctx.c_tensor.grid_w + c_sample.coords[:, 1]
        s_flat = np.sort(rng.choice(ctx.s_tensor.n_cells, size=m, replace=False))
        s_flat = _augment_style_sample(s_flat, pairs, (ctx.s_tensor.grid_h, ctx.s_tensor.grid_w))

        img = collapse_pyramid_tensors(params)
        o_tensor = extract_hypercolumns(img, config.bank)
        o_feats = FeatureSample(c_sample.coords, ad.gather_rows(o_tensor.data, c_flat))
        c_feats = FeatureSample(c_sample.coords, ad.Tensor(ctx.c_tensor.data.data[c_flat]))
        s_coords = np.stack([s_flat // ctx.s_tensor.grid_w, s_flat % ctx.s_tensor.grid_w], axis=1)
        s_feats = FeatureSample(s_coords, ad.Tensor(ctx.s_tensor.data.data[s_flat]))

        o_grid = ad.resize_bilinear(img, o_tensor.grid_h, o_tensor.grid_w)
        o_pix = ad.gather_rows(ad.reshape(o_grid, (o_tensor.n_cells, 3)), c_flat)
        s_pix = ad.Tensor(ctx.s_pixels[s_flat])

        sample_pairs = [
            (cm.reshape(-1)[c_flat], sm.reshape(-1)[s_flat]) for cm, sm in pairs
        ]
        sample_pairs = [(r, c) for r, c in sample_pairs if r.any() or c.any()]
        diag: dict = {}
        loss = total_loss(
            o_feats,
            c_feats,
            s_feats,
            o_pix,
            s_pix,
            alpha,
            sample_pairs,
            beta=guidance.beta if guidance is not None else 5.0,
            diagnostics=diag,
        )
        loss.backward()
        opt.step()
        trace.append(float(loss.data))
        if on_step is not None:
            diag.update(step=step, loss=float(loss.data), image=img.data)
            on_step(diag)

    final = collapse_pyramid_tensors(params)
    return ImageBuffer(final.data, output.colorspace), trace


@dataclass
class StrotssResult:
    image: ImageBuffer
    scale_traces: list[list[float]]
    scale_alphas: list[float]


def stylize(
    content: ImageBuffer,
    style: ImageBuffer,
    config: StrotssConfig | None = None,
    guidance: GuidanceSpec | None = None,
    on_step: Callable[[dict], None] | None = None,
) -> StrotssResult:
    """Coarse-to-fine stylization; each scale starts from the 2x-upsampled
    previous result."""
    config = config or StrotssConfig()
    if guidance is not None:
        guidance.validate((content.height, content.width), (style.height, style.width))
    rng = np.random.default_rng(np.random.PCG64(config.seed))
    alphas = config.scale_alphas()
    out = init_output(content, style, config.coarsest_long_side)
    traces = []
    orig_dims = ((content.height, content.width), (style.height, style.width))
    for k in range(config.scales):
        long_side = config.coarsest_long_side * 2**k
        c_k = resize_long_side(content, long_side)
        s_k = resize_long_side(style, long_side)
        if (out.height, out.width) != (c_k.height, c_k.width):
            out = resize_bilinear(out, c_k.height, c_k.width)
        lr = config.final_scale_lr if k == config.scales - 1 and config.scales > 1 else config.lr
        scale_cb = None
        if on_step is not None:
            def scale_cb(diag, _k=k):
                diag["scale"] = _k
                on_step(diag)
        out, trace = stylize_scale(
            out,
            c_k,
            s_k,
            alphas[k],
            config,
            rng,
            lr=lr,
            guidance=guidance,
            guidance_orig_dims=orig_dims,
            on_step=scale_cb,
        )
        traces.append(trace)
    return StrotssResult(ImageBuffer(np.clip(out.data, 0.0, 1.0)), traces, alphas)


def evaluate_loss(
    output: ImageBuffer,
    content: ImageBuffer,
    style: ImageBuffer,
    alpha: float,
    config: StrotssConfig,
    coord_seed: int = 99,
) -> float:
    """Objective on a fixed held-out coordinate set (no optimization)."""
    ctx = _ScaleContext(content, style, config)
    rng = np.random.default_rng(np.random.PCG64(coord_seed))
    n = min(config.samples, ctx.c_tensor.n_cells)
    m = min(config.samples, ctx.s_tensor.n_cells)
    c_sample = sample_features(ctx.c_tensor, n, "jittered_grid", rng)
    c_flat = c_sample.coords[:, 0] * ctx.c_tensor.grid_w + c_sample.coords[:, 1]
    s_flat = np.sort(rng.choice(ctx.s_tensor.n_cells, size=m, replace=False))

    img = ad.Tensor(output.data)
    o_tensor = extract_hypercolumns(img, config.bank)
    o_feats = FeatureSample(c_sample.coords, ad.gather_rows(o_tensor.data, c_flat))
    c_feats = FeatureSample(c_sample.coords, ad.Tensor(ctx.c_tensor.data.data[c_flat]))
    s_coords = np.stack([s_flat // ctx.s_tensor.grid_w, s_flat % ctx.s_tensor.grid_w], axis=1)
    s_feats = FeatureSample(s_coords, ad.Tensor(ctx.s_tensor.data.data[s_flat]))
    o_grid = ad.resize_bilinear(img, o_tensor.grid_h, o_tensor.grid_w)
    o_pix = ad.gather_rows(ad.reshape(o_grid, (o_tensor.n_cells, 3)), c_flat)
    s_pix = ad.Tensor(ctx.s_pixels[s_flat])
    return float(total_loss(o_feats, c_feats, s_feats, o_pix, s_pix, alpha).data)
