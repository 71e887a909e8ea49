"""Luminance-preserving color post-processing.

The stylized result keeps only its L channel; hue and chroma come from the
content's AB channels, bilaterally filtered with the stylized luminance as
the range guide so color boundaries follow luminance edges, then moment
matched to the style palette.  Apparently monochrome styles skip the whole
stage, detected by a threshold on the AB covariance.
"""

from __future__ import annotations

import numpy as np

from .image import Colorspace, ColorspaceError, ImageBuffer, lab_to_rgb, rgb_to_lab

MONOCHROME_AB_COV_THRESHOLD = 4e-5
DEFAULT_SIGMA_SPATIAL = 5.0
DEFAULT_SIGMA_RANGE = 10.0


def guided_bilateral_filter(
    ab: ImageBuffer, guide_l: ImageBuffer, sigma_s: float, sigma_r: float
) -> ImageBuffer:
    """Cross-bilateral filter: spatial Gaussian sigma_s (pixels), range
    Gaussian sigma_r on guide differences.  Window half-width is 3*sigma_s;
    borders replicate."""
    if sigma_s <= 0 or sigma_r <= 0:
        raise ValueError("filter sigmas must be positive")
    if ab.data.shape[:2] != guide_l.data.shape[:2]:
        raise ValueError("AB and guide dimensions differ")
    radius = int(np.ceil(3.0 * sigma_s))
    x = np.pad(ab.data, ((radius, radius), (radius, radius), (0, 0)), mode="edge")
    g = np.pad(guide_l.data[:, :, 0], radius, mode="edge")
    h, w = ab.data.shape[:2]
    center = g[radius : radius + h, radius : radius + w]
    acc = np.zeros_like(ab.data)
    weight = np.zeros((h, w, 1))
    for dy in range(-radius, radius + 1):
        for dx in range(-radius, radius + 1):
            sw = np.exp(-0.5 * (dy * dy + dx * dx) / (sigma_s * sigma_s))
            gs = g[radius + dy : radius + dy + h, radius + dx : radius + dx + w]
            rw = np.exp(-0.5 * ((gs - center) / sigma_r) ** 2)
            tw = (sw * rw)[:, :, None]
            acc += tw * x[radius + dy : radius + dy + h, radius + dx : radius + dx + w]
            weight += tw
    return ImageBuffer(acc / weight, ab.colorspace)


def _match_moments(
    pixels: np.ndarray, style_pixels: np.ndarray, eps: float = 1e-6
) -> np.ndarray:
    """Affine recoloring x -> A (x - mu) + mu_style with A built from the
    symmetric square roots of the two covariances."""
    mu_x = pixels.mean(axis=0)
    mu_s = style_pixels.mean(axis=0)
    cx = np.cov(pixels, rowvar=False, bias=True) + eps * np.eye(pixels.shape[1])
    cs = np.cov(style_pixels, rowvar=False, bias=True) + eps * np.eye(pixels.shape[1])

    def sqrt_psd(mat):
        vals, vecs = np.linalg.eigh(mat)
        vals = np.maximum(vals, 0.0)
        return (vecs * np.sqrt(vals)) @ vecs.T

    sx = sqrt_psd(cx)
    ss = sqrt_psd(cs)
    a = ss @ np.linalg.inv(sx)
    return (pixels - mu_x) @ a.T + mu_s


def match_color_moments(img: ImageBuffer, style: ImageBuffer, clamp: bool = True) -> ImageBuffer:
    """Match Lab mean and covariance to the style; by default the output is
    clamped to the Lab gamut (pass clamp=False for the raw affine map)."""
    if img.colorspace != Colorspace.LAB or style.colorspace != Colorspace.LAB:
        raise ColorspaceError("moment matching expects Lab inputs")
    h, w, c = img.data.shape
    out = _match_moments(img.data.reshape(-1, c), style.data.reshape(-1, c)).reshape(h, w, c)
    if clamp:
        lo = np.array([0.0, -128.0, -128.0])[:c]
        hi = np.array([100.0, 128.0, 128.0])[:c]
        out = np.clip(out, lo, hi)
    return ImageBuffer(out, Colorspace.LAB)


def is_monochrome(style_lab: ImageBuffer) -> bool:
    """True when the style's AB covariance is negligible.

    AB is normalized by 256 into [-0.5, 0.5] before the covariance so the
    threshold applies to unit-scaled channels.
    """
    if style_lab.colorspace != Colorspace.LAB:
        raise ColorspaceError("monochrome gate expects a Lab image")
    ab = style_lab.data[:, :, 1:3].reshape(-1, 2) / 256.0
    cov = np.cov(ab, rowvar=False, bias=True)
    return bool(np.abs(cov).max() < MONOCHROME_AB_COV_THRESHOLD)


def post_process_lab(
    stylized: ImageBuffer,
    content: ImageBuffer,
    style: ImageBuffer,
    sigma_s: float = DEFAULT_SIGMA_SPATIAL,
    sigma_r: float = DEFAULT_SIGMA_RANGE,
    clamp: bool = True,
) -> ImageBuffer | None:
    """Lab-space color rebuild, or None when the monochrome gate fires.

    The output's L plane is the stylized L plane, copied verbatim; only the
    AB channels are filtered and moment matched.
    """
    style_lab = rgb_to_lab(style)
    if is_monochrome(style_lab):
        return None
    if stylized.data.shape[:2] != content.data.shape[:2]:
        raise ValueError("stylized and content dimensions differ")
    sty_lab = rgb_to_lab(stylized)
    con_lab = rgb_to_lab(content)
    guide = ImageBuffer(sty_lab.data[:, :, 0:1], Colorspace.LAB)
    ab = ImageBuffer(con_lab.data[:, :, 1:3], Colorspace.LAB)
    ab_f = guided_bilateral_filter(ab, guide, sigma_s, sigma_r)
    # moment match chroma only; luminance survives bit-exactly
    matched = _match_moments(
        ab_f.data.reshape(-1, 2), style_lab.data[:, :, 1:3].reshape(-1, 2)
    ).reshape(ab_f.data.shape)
    if clamp:
        matched = np.clip(matched, -128.0, 128.0)
    out_lab = np.concatenate([sty_lab.data[:, :, 0:1], matched], axis=2)
    return ImageBuffer(out_lab, Colorspace.LAB)


def post_process(
    stylized: ImageBuffer,
    content: ImageBuffer,
    style: ImageBuffer,
    enabled: bool = True,
    sigma_s: float = DEFAULT_SIGMA_SPATIAL,
    sigma_r: float = DEFAULT_SIGMA_RANGE,
) -> ImageBuffer:
    """RGB front door: identity when disabled or when the style is
    monochrome, otherwise the Lab rebuild converted back to sRGB."""
    if not enabled:
        return stylized
    lab = post_process_lab(stylized, content, style, sigma_s, sigma_r)
    if lab is None:
        return stylized
    return lab_to_rgb(lab)
