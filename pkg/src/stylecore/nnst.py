"""Nearest-neighbor target construction and direct pixel optimization.

Each content hypercolumn is replaced by its closest style hypercolumn under
zero-centered cosine distance, pooling style features from four rotated
copies of the style image.  The output image is then optimized so its
features reproduce this target, scale by scale.  At the finest scale a
final phase matches each layer block independently (splicing novel
hypercolumns) and refreshes the matches after every update, using the
current output instead of the content as the matching source.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import autodiff as ad
from .colorpost import post_process
from .features import FeatureTensor, FilterBankSpec, build_filter_bank, extract_hypercolumns, extract_with_rotations
from .image import ImageBuffer, build_laplacian_pyramid, collapse_pyramid_tensors, resize_bilinear


MATCH_TILE_ROWS = 4096


@dataclass
class NnstConfig:
    alpha_blend: float = 0.25
    scales: int = 4
    updates: int = 200
    split_updates: int = 200
    lr: float = 2e-3
    adam_betas: tuple[float, float] = (0.9, 0.999)
    adam_eps: float = 1e-8
    pyramid_levels: int = 8
    split_phase: bool = True
    use_rotations: bool = True
    centered: bool = True
    color_post: bool = True
    seed: int = 0
    bank: FilterBankSpec = field(default_factory=FilterBankSpec)

    def __post_init__(self):
        if not 0.0 <= self.alpha_blend <= 1.0:
            raise ValueError("alpha_blend must lie in [0, 1]")


@dataclass
class TargetFeatures:
    """Per-cell target vectors plus their provenance in the style pool.

    ``sources`` maps each cell (and, in split mode, each layer block) to a
    (rotation id, flat cell index) pair in the style pool.
    """

    grid_h: int
    grid_w: int
    vectors: np.ndarray  # cells x D
    sources: np.ndarray  # cells x blocks x 2


def _normalize_rows(x: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(x, axis=1, keepdims=True)
    return x / np.maximum(norms, 1e-12)


def _nearest_rows(content: np.ndarray, pool: np.ndarray) -> np.ndarray:
    """Row-wise argmin of cosine distance, tiled to bound memory; ties take
    the first pool index."""
    cn = _normalize_rows(content)
    pn = _normalize_rows(pool)
    out = np.empty(len(cn), dtype=np.int64)
    for lo in range(0, len(cn), MATCH_TILE_ROWS):
        hi = min(lo + MATCH_TILE_ROWS, len(cn))
        sims = cn[lo:hi] @ pn.T
        out[lo:hi] = np.argmax(sims, axis=1)
    return out


def match_features(
    content_f: FeatureTensor,
    style_pool: list[FeatureTensor],
    centered: bool = True,
    per_layer: bool = False,
    layer_slices: list[slice] | None = None,
) -> TargetFeatures:
    """Replace every content cell with its nearest style-pool vector.

    Whole-column mode matches complete hypercolumns; split mode runs the
    argmin independently per layer block and splices the winners.  Centering
    subtracts the content mean from content rows and the pooled style mean
    from pool rows before the cosine argmin.
    """
    if not style_pool:
        raise ValueError("empty style pool")
    if any(t.dim != content_f.dim for t in style_pool):
        raise ValueError("style pool feature dim does not match content")
    pool = np.concatenate([t.data.data for t in style_pool], axis=0)
    pool_origin = np.concatenate(
        [np.stack([np.full(t.n_cells, r), np.arange(t.n_cells)], axis=1) for r, t in enumerate(style_pool)]
    )
    content = content_f.data.data
    if layer_slices is None:
        layer_slices = [slice(0, content_f.dim)]
    blocks = layer_slices if per_layer else [slice(0, content_f.dim)]

    vectors = np.empty_like(content)
    sources = np.empty((len(content), len(blocks), 2), dtype=np.int64)
    for bi, sl in enumerate(blocks):
        cpart, ppart = content[:, sl], pool[:, sl]
        if centered:
            cpart = cpart - cpart.mean(axis=0)
            ppart = ppart - ppart.mean(axis=0)
        idx = _nearest_rows(cpart, ppart)
        vectors[:, sl] = pool[idx][:, sl]
        sources[:, bi, :] = pool_origin[idx]
    return TargetFeatures(content_f.grid_h, content_f.grid_w, vectors, sources)


def nn_objective(output_f: FeatureTensor, target: TargetFeatures) -> ad.Tensor:
    """Mean negative cosine similarity between output cells and their
    targets (uncentered)."""
    if (output_f.grid_h, output_f.grid_w) != (target.grid_h, target.grid_w):
        raise ValueError("output feature grid does not match the target")
    o = output_f.data
    t = target.vectors
    sq = ad.tsum(ad.mul(o, o), axis=1)
    tn = np.linalg.norm(t, axis=1)
    if float(np.min(sq.data)) < 1e-24 or float(np.min(tn)) < 1e-12:
        raise ValueError("zero feature vector in the matching objective")
    dots = ad.tsum(ad.mul(o, ad.Tensor(t / tn[:, None])), axis=1)
    return ad.mul(ad.tmean(ad.div(dots, ad.sqrt(sq))), -1.0)


class Adam:
    def __init__(self, params: list[ad.Tensor], lr: float, betas: tuple[float, float], eps: float):
        self.params = params
        self.lr, self.eps = lr, eps
        self.b1, self.b2 = betas
        self.m = [np.zeros_like(p.data) for p in params]
        self.v = [np.zeros_like(p.data) for p in params]
        self.t = 0

    def step(self) -> None:
        self.t += 1
        for p, m, v in zip(self.params, self.m, self.v):
            if p.grad is None:
                continue
            m *= self.b1
            m += (1 - self.b1) * p.grad
            v *= self.b2
            v += (1 - self.b2) * p.grad * p.grad
            mh = m / (1 - self.b1**self.t)
            vh = v / (1 - self.b2**self.t)
            p.data -= self.lr * mh / (np.sqrt(vh) + self.eps)
            p.grad = None


def _style_pool(style: ImageBuffer, config: NnstConfig) -> list[FeatureTensor]:
    if config.use_rotations:
        return extract_with_rotations(style, config.bank)
    return [extract_hypercolumns(style, config.bank)]


def _optimize_to_target(
    init: ImageBuffer,
    target: TargetFeatures | None,
    config: NnstConfig,
    updates: int,
    rematch: Callable[[FeatureTensor], TargetFeatures] | None = None,
    on_step: Callable[[dict], None] | None = None,
    step_offset: int = 0,
) -> tuple[ImageBuffer, list[float]]:
    n_levels = min(config.pyramid_levels, int(np.log2(min(init.height, init.width))) + 1)
    pyr = build_laplacian_pyramid(init, n_levels)
    params = [ad.Tensor(lv.copy(), requires_grad=True) for lv in pyr.levels]
    opt = Adam(params, config.lr, config.adam_betas, config.adam_eps)
    trace = []
    for step in range(updates):
        img = collapse_pyramid_tensors(params)
        feats = extract_hypercolumns(img, config.bank)
        if rematch is not None:
            target = rematch(feats)
        loss = nn_objective(feats, target)
        loss.backward()
        opt.step()
        trace.append(float(loss.data))
        if on_step is not None:
            on_step({"step": step_offset + step, "loss": float(loss.data), "image": img.data})
    final = collapse_pyramid_tensors(params)
    return ImageBuffer(final.data, init.colorspace), trace


@dataclass
class NnstResult:
    image: ImageBuffer
    raw_image: ImageBuffer  # before color post-processing
    scale_traces: list[list[float]]


def stylize(
    content: ImageBuffer,
    style: ImageBuffer,
    config: NnstConfig | None = None,
    on_step: Callable[[dict], None] | None = None,
) -> NnstResult:
    """Full coarse-to-fine run at eighth/quarter/half/full resolution."""
    config = config or NnstConfig()
    if content.channels != 3 or style.channels != 3:
        raise ValueError("stylization expects 3-channel content and style images")
    bank = build_filter_bank(config.bank)
    fractions = [2 ** (k - config.scales + 1) for k in range(config.scales)]
    traces: list[list[float]] = []
    out: ImageBuffer | None = None
    total_steps = 0
    for k, frac in enumerate(fractions):
        h = max(8, round(content.height * frac))
        w = max(8, round(content.width * frac))
        c_k = resize_bilinear(content, h, w)
        s_k = resize_bilinear(style, max(8, round(style.height * frac)), max(8, round(style.width * frac)))
        pool = _style_pool(s_k, config)

        if out is None:
            init = c_k
            source = c_k
        else:
            up = resize_bilinear(out, h, w)
            init = up
            source = ImageBuffer(
                config.alpha_blend * up.data + (1.0 - config.alpha_blend) * c_k.data
            )
        src_feats = extract_hypercolumns(source, config.bank)
        target = match_features(src_feats, pool, centered=config.centered)
        out, trace = _optimize_to_target(
            init, target, config, config.updates, on_step=on_step, step_offset=total_steps
        )
        total_steps += config.updates
        traces.append(trace)

        final_scale = k == config.scales - 1
        if final_scale and config.split_phase and config.split_updates > 0:
            slices = bank.layer_slices()

            def rematch(feats: FeatureTensor) -> TargetFeatures:
                return match_features(
                    feats, pool, centered=config.centered, per_layer=True, layer_slices=slices
                )

            out, trace = _optimize_to_target(
                out,
                None,
                config,
                config.split_updates,
                rematch=rematch,
                on_step=on_step,
                step_offset=total_steps,
            )
            total_steps += config.split_updates
            traces.append(trace)

    raw = ImageBuffer(np.clip(out.data, 0.0, 1.0))
    final = post_process(raw, content, style, enabled=config.color_post)
    return NnstResult(final, raw, traces)
