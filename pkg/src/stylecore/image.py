"""Image containers, colorspace conversions, resampling, Laplacian pyramids.

All pixel data is float64, shape HxWxC, row-major.  Every function is pure;
the sampling convention everywhere is half-pixel centers with clamp-to-border
edge handling, and pyramid bands are built as ``x - up(down(x))`` so the
band/residual split collapses back exactly.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from PIL import Image as PilImage

from . import autodiff as ad


class Colorspace(enum.Enum):
    LINEAR_RGB = "linear_rgb"
    SRGB = "srgb"
    LAB = "lab"
    OPPONENT = "opponent"


class ColorspaceError(ValueError):
    pass


@dataclass(frozen=True)
class ImageBuffer:
    """An HxWxC floating-point raster tagged with its colorspace."""

    data: np.ndarray
    colorspace: Colorspace = Colorspace.SRGB

    def __post_init__(self):
        arr = np.asarray(self.data, dtype=np.float64)
        if arr.ndim == 2:
            arr = arr[:, :, None]
        # 2-channel buffers carry Lab AB planes in the color post stage.
        if arr.ndim != 3 or arr.shape[2] not in (1, 2, 3):
            raise ValueError(f"expected HxWxC with 1-3 channels, got shape {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError("zero-sized image")
        object.__setattr__(self, "data", arr)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def channels(self) -> int:
        return self.data.shape[2]


def resize_bilinear(img: ImageBuffer, new_h: int, new_w: int) -> ImageBuffer:
    """Bilinear resize with half-pixel centers; constants are preserved."""
    if new_h < 1 or new_w < 1:
        raise ValueError("target size must be at least 1x1")
    out = ad.resize_bilinear(ad.Tensor(img.data), new_h, new_w)
    return ImageBuffer(out.data, img.colorspace)


def resize_long_side(img: ImageBuffer, long_side: int) -> ImageBuffer:
    h, w = img.height, img.width
    if h >= w:
        nh = long_side
        nw = max(1, round(w * long_side / h))
    else:
        nw = long_side
        nh = max(1, round(h * long_side / w))
    return resize_bilinear(img, nh, nw)


def _down2(x: np.ndarray) -> np.ndarray:
    return ad.avg_pool2(ad.Tensor(x)).data


@dataclass
class LaplacianPyramid:
    """Band-pass decomposition, finest level first; last level is the
    low-pass residual."""

    levels: list[np.ndarray]

    def level_shapes(self) -> list[tuple[int, ...]]:
        return [lv.shape for lv in self.levels]


def build_laplacian_pyramid(img: ImageBuffer | np.ndarray, n_levels: int) -> LaplacianPyramid:
    """Decompose into ``n_levels`` bands; level i is at ceil(H/2^i) size."""
    x = img.data if isinstance(img, ImageBuffer) else np.asarray(img, dtype=np.float64)
    if n_levels < 1:
        raise ValueError("need at least one pyramid level")
    if min(x.shape[0], x.shape[1]) < 2 ** (n_levels - 1):
        raise ValueError(
            f"image {x.shape[0]}x{x.shape[1]} too small for {n_levels} pyramid levels"
        )
    levels = []
    cur = x
    for i in range(n_levels - 1):
        small = _down2(cur)
        up = ad.resize_bilinear(ad.Tensor(small), cur.shape[0], cur.shape[1]).data
        levels.append(cur - up)
        cur = small
    levels.append(cur)
    return LaplacianPyramid(levels)


def collapse_laplacian_pyramid(pyr: LaplacianPyramid) -> ImageBuffer:
    levels = pyr.levels
    if not levels:
        raise ValueError("empty pyramid")
    for a, b in zip(levels, levels[1:]):
        if b.shape[0] > a.shape[0] or b.shape[1] > a.shape[1] or a.shape[2] != b.shape[2]:
            raise ValueError("inconsistent pyramid level shapes")
    cur = levels[-1]
    for band in reversed(levels[:-1]):
        cur = ad.resize_bilinear(ad.Tensor(cur), band.shape[0], band.shape[1]).data + band
    return ImageBuffer(cur)


def collapse_pyramid_tensors(levels: list[ad.Tensor]) -> ad.Tensor:
    """Differentiable collapse used when the pyramid is the optimization
    variable."""
    cur = levels[-1]
    for band in reversed(levels[:-1]):
        cur = ad.add(ad.resize_bilinear(cur, band.shape[0], band.shape[1]), band)
    return cur


# ---- colorspaces -----------------------------------------------------------

# sRGB <-> XYZ (D65), IEC 61966-2-1
_RGB_TO_XYZ = np.array(
    [
        [0.4124564, 0.3575761, 0.1804375],
        [0.2126729, 0.7151522, 0.0721750],
        [0.0193339, 0.1191920, 0.9503041],
    ]
)
_XYZ_TO_RGB = np.linalg.inv(_RGB_TO_XYZ)
# White point implied by the matrix (D65); keeps (1,1,1) at exactly L=100.
_D65 = _RGB_TO_XYZ @ np.ones(3)

# Orthonormal opponent basis: achromatic mean axis plus two chroma axes.
OPPONENT_BASIS = np.array(
    [
        [1.0 / np.sqrt(3.0), 1.0 / np.sqrt(3.0), 1.0 / np.sqrt(3.0)],
        [1.0 / np.sqrt(2.0), -1.0 / np.sqrt(2.0), 0.0],
        [1.0 / np.sqrt(6.0), 1.0 / np.sqrt(6.0), -2.0 / np.sqrt(6.0)],
    ]
)


def srgb_to_linear(c: np.ndarray) -> np.ndarray:
    c = np.asarray(c, dtype=np.float64)
    return np.where(c <= 0.04045, c / 12.92, ((c + 0.055) / 1.055) ** 2.4)


def linear_to_srgb(c: np.ndarray) -> np.ndarray:
    c = np.asarray(c, dtype=np.float64)
    c = np.maximum(c, 0.0)
    return np.where(c <= 0.0031308, c * 12.92, 1.055 * c ** (1 / 2.4) - 0.055)


def _lab_f(t: np.ndarray) -> np.ndarray:
    d = 6.0 / 29.0
    return np.where(t > d**3, np.cbrt(t), t / (3 * d * d) + 4.0 / 29.0)


def _lab_f_inv(t: np.ndarray) -> np.ndarray:
    d = 6.0 / 29.0
    return np.where(t > d, t**3, 3 * d * d * (t - 4.0 / 29.0))


def rgb_to_lab(img: ImageBuffer) -> ImageBuffer:
    """CIE Lab under D65; expects an SRGB-tagged 3-channel image."""
    if img.colorspace != Colorspace.SRGB:
        raise ColorspaceError(f"rgb_to_lab expects SRGB input, got {img.colorspace}")
    if img.channels != 3:
        raise ColorspaceError("rgb_to_lab expects 3 channels")
    lin = srgb_to_linear(img.data)
    xyz = lin @ _RGB_TO_XYZ.T
    f = _lab_f(xyz / _D65)
    lab = np.stack(
        [
            116.0 * f[:, :, 1] - 16.0,
            500.0 * (f[:, :, 0] - f[:, :, 1]),
            200.0 * (f[:, :, 1] - f[:, :, 2]),
        ],
        axis=2,
    )
    return ImageBuffer(lab, Colorspace.LAB)


def lab_to_rgb(img: ImageBuffer) -> ImageBuffer:
    if img.colorspace != Colorspace.LAB:
        raise ColorspaceError(f"lab_to_rgb expects Lab input, got {img.colorspace}")
    lab = img.data
    fy = (lab[:, :, 0] + 16.0) / 116.0
    fx = fy + lab[:, :, 1] / 500.0
    fz = fy - lab[:, :, 2] / 200.0
    xyz = np.stack([_lab_f_inv(fx), _lab_f_inv(fy), _lab_f_inv(fz)], axis=2) * _D65
    lin = xyz @ _XYZ_TO_RGB.T
    rgb = np.clip(linear_to_srgb(lin), 0.0, 1.0)
    return ImageBuffer(rgb, Colorspace.SRGB)


def to_opponent_space(img: ImageBuffer) -> ImageBuffer:
    """Orthonormal decorrelated color basis with the mean-color axis first."""
    if img.channels != 3:
        raise ColorspaceError("opponent transform expects 3 channels")
    opp = img.data @ OPPONENT_BASIS.T
    return ImageBuffer(opp, Colorspace.OPPONENT)


def opponent_tensor(t: ad.Tensor) -> ad.Tensor:
    """Differentiable opponent transform over an Nx3 tensor of colors."""
    return ad.matmul(t, ad.Tensor(OPPONENT_BASIS.T))


# ---- file I/O --------------------------------------------------------------


def load_image(path) -> ImageBuffer:
    """Decode PNG/JPEG to float64 in [0,1]; grayscale stays single-channel."""
    with PilImage.open(path) as im:
        if im.mode in ("L", "I;16", "I"):
            im = im.convert("L")
            arr = np.asarray(im, dtype=np.float64)[:, :, None] / 255.0
        else:
            im = im.convert("RGB")
            arr = np.asarray(im, dtype=np.float64) / 255.0
    return ImageBuffer(arr, Colorspace.SRGB)


def save_image(img: ImageBuffer, path) -> None:
    arr = np.clip(img.data, 0.0, 1.0)
    arr8 = np.round(arr * 255.0).astype(np.uint8)
    if arr8.shape[2] == 1:
        pil = PilImage.fromarray(arr8[:, :, 0], mode="L")
    else:
        pil = PilImage.fromarray(arr8, mode="RGB")
    pil.save(path)
