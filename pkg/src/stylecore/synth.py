"""Procedural test images: smooth fields, gradients, shapes, and textures.

These stand in for photographic inputs wherever the pipelines or the
transport experiment need realistic image structure with a fixed seed.
"""

from __future__ import annotations

import numpy as np

from .image import ImageBuffer, resize_bilinear


def smooth_noise(seed: int, h: int, w: int, base: int = 6) -> ImageBuffer:
    """Low-frequency color field: upsampled coarse noise."""
    rng = np.random.default_rng(np.random.PCG64(seed))
    coarse = rng.random((base, base, 3))
    return resize_bilinear(ImageBuffer(coarse), h, w)


def textured(seed: int, h: int, w: int) -> ImageBuffer:
    """Smooth field plus band-limited detail; a stand-in for a photo."""
    rng = np.random.default_rng(np.random.PCG64(seed))
    img = smooth_noise(seed, h, w).data
    mid = resize_bilinear(ImageBuffer(rng.random((h // 4 + 1, w // 4 + 1, 3))), h, w).data
    fine = rng.random((h, w, 3))
    out = 0.6 * img + 0.3 * mid + 0.1 * fine
    return ImageBuffer(np.clip(out, 0.0, 1.0))


def shapes(seed: int, h: int, w: int) -> ImageBuffer:
    """Flat-color rectangles and a disc over a gradient background."""
    rng = np.random.default_rng(np.random.PCG64(seed))
    yy, xx = np.meshgrid(np.linspace(0, 1, h), np.linspace(0, 1, w), indexing="ij")
    img = np.stack([yy, xx, 0.5 * (yy + xx)], axis=2) * 0.6 + 0.2
    for _ in range(4):
        color = rng.random(3)
        y0, x0 = rng.integers(0, h // 2), rng.integers(0, w // 2)
        y1, x1 = y0 + rng.integers(h // 8, h // 2), x0 + rng.integers(w // 8, w // 2)
        img[y0 : min(y1, h), x0 : min(x1, w)] = color
    cy, cx, r = rng.integers(h // 4, 3 * h // 4), rng.integers(w // 4, 3 * w // 4), min(h, w) // 6
    disc = (yy * (h - 1) - cy) ** 2 + (xx * (w - 1) - cx) ** 2 < r * r
    img[disc] = rng.random(3)
    return ImageBuffer(np.clip(img, 0.0, 1.0))


def grayscale(seed: int, h: int, w: int) -> ImageBuffer:
    """Achromatic version of the textured image."""
    img = textured(seed, h, w).data
    lum = img.mean(axis=2, keepdims=True)
    return ImageBuffer(np.repeat(lum, 3, axis=2))
