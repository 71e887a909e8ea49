"""Hypercolumn feature extraction from a deterministic seeded filter bank.

The bank is a fixed convolutional stack: four blocks of two bias-free 3x3
conv layers with leaky-relu activations and 2x average pooling between
blocks.  Weights come from a seeded PRNG with fan-in scaling, and each
layer's activations are normalized by a scale constant calibrated once on a
fixed noise image, so features from different depths contribute comparable
magnitudes to the hypercolumn.

Per-layer activations are bilinearly resized to one quarter of the input
resolution and concatenated along channels.  Extraction is differentiable
when the input is a graph tensor, and a pure function of (image, spec).
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .image import ImageBuffer


DEFAULT_BLOCKS = ((2, 16), (2, 32), (2, 64), (2, 128))


class FeatureFileError(ValueError):
    pass


@dataclass(frozen=True)
class FilterBankSpec:
    seed: int = 0
    blocks: tuple[tuple[int, int], ...] = DEFAULT_BLOCKS
    leaky_slope: float = 0.2
    included_layers: tuple[int, ...] | None = None  # None = all

    @property
    def n_layers(self) -> int:
        return sum(n for n, _ in self.blocks)

    def layer_widths(self) -> list[int]:
        widths = []
        for n, w in self.blocks:
            widths.extend([w] * n)
        return widths

    def active_layers(self) -> list[int]:
        if self.included_layers is None:
            return list(range(self.n_layers))
        return sorted(self.included_layers)

    @property
    def dim(self) -> int:
        widths = self.layer_widths()
        return sum(widths[i] for i in self.active_layers())


@dataclass
class FilterBank:
    spec: FilterBankSpec
    kernels: list[np.ndarray]
    layer_scales: np.ndarray  # one divisor per conv layer

    def layer_slices(self) -> list[slice]:
        """Channel ranges of each included layer inside the hypercolumn."""
        widths = self.spec.layer_widths()
        out, off = [], 0
        for i in self.spec.active_layers():
            out.append(slice(off, off + widths[i]))
            off += widths[i]
        return out


_BANK_CACHE: dict[FilterBankSpec, FilterBank] = {}


def build_filter_bank(spec: FilterBankSpec | None = None) -> FilterBank:
    """Deterministic bank construction: same spec, bit-identical weights."""
    spec = spec or FilterBankSpec()
    cached = _BANK_CACHE.get(spec)
    if cached is not None:
        return cached
    rng = np.random.default_rng(np.random.PCG64(spec.seed))
    kernels = []
    cin = 3
    for n_layers, width in spec.blocks:
        for _ in range(n_layers):
            fan_in = 3 * 3 * cin
            k = rng.standard_normal((3, 3, cin, width)) * np.sqrt(2.0 / fan_in)
            kernels.append(k)
            cin = width
    bank = FilterBank(spec, kernels, np.ones(len(kernels)))
    bank.layer_scales = _calibrate(bank)
    _BANK_CACHE[spec] = bank
    return bank


def _calibrate(bank: FilterBank) -> np.ndarray:
    """Per-layer RMS on a fixed noise image; used as activation divisors."""
    rng = np.random.default_rng(np.random.PCG64(12345))
    img = rng.random((64, 64, 3))
    acts = _run_stack(ad.Tensor(img), bank, normalized=False)
    scales = np.array([max(float(np.sqrt(np.mean(a.data**2))), 1e-8) for a in acts])
    return scales


def _run_stack(x: ad.Tensor, bank: FilterBank, normalized: bool = True) -> list[ad.Tensor]:
    """All conv-layer activations, in order; pools between blocks."""
    acts = []
    cur = x
    li = 0
    for bi, (n_layers, _) in enumerate(bank.spec.blocks):
        if bi > 0:
            cur = ad.avg_pool2(cur)
        for _ in range(n_layers):
            cur = ad.leaky_relu(ad.conv2d(cur, ad.Tensor(bank.kernels[li])), bank.spec.leaky_slope)
            if normalized:
                acts.append(ad.mul(cur, 1.0 / bank.layer_scales[li]))
            else:
                acts.append(cur)
            li += 1
    return acts


@dataclass
class FeatureTensor:
    """Dense hypercolumn grid at quarter resolution, flattened row-major.

    ``data`` has shape (grid_h * grid_w, dim) and may be a graph tensor.
    """

    grid_h: int
    grid_w: int
    dim: int
    data: ad.Tensor

    @property
    def n_cells(self) -> int:
        return self.grid_h * self.grid_w


@dataclass
class FeatureSample:
    """Sparse sampled feature set; coords are (row, col) in grid units."""

    coords: np.ndarray  # n x 2 int
    vectors: ad.Tensor  # n x D

    @property
    def n(self) -> int:
        return len(self.coords)


def extract_hypercolumns(
    img: ImageBuffer | ad.Tensor, spec: FilterBankSpec | None = None
) -> FeatureTensor:
    """Quarter-resolution hypercolumns; differentiable for tensor inputs."""
    spec = spec or FilterBankSpec()
    bank = build_filter_bank(spec)
    x = img if isinstance(img, ad.Tensor) else ad.Tensor(img.data)
    h, w = x.shape[0], x.shape[1]
    # The coarsest pipeline scale runs at one eighth of the input size, so
    # the practical floor is far below the nominal working resolution.
    if min(h, w) < 8:
        raise ValueError(f"image {h}x{w} too small for feature extraction (min side 8)")
    if x.shape[2] == 1:
        x = ad.concat([x, x, x], axis=2)
    gh, gw = -(-h // 4), -(-w // 4)
    acts = _run_stack(x, bank)
    active = spec.active_layers()
    resized = [ad.resize_bilinear(acts[i], gh, gw) for i in active]
    grid = ad.concat(resized, axis=2)
    flat = ad.reshape(grid, (gh * gw, spec.dim))
    return FeatureTensor(gh, gw, spec.dim, flat)


def extract_with_rotations(
    img: ImageBuffer, spec: FilterBankSpec | None = None
) -> list[FeatureTensor]:
    """Features of the image rotated by 0, 90, 180, 270 degrees."""
    out = []
    arr = img.data
    for k in range(4):
        rot = np.ascontiguousarray(np.rot90(arr, k))
        out.append(extract_hypercolumns(ImageBuffer(rot, img.colorspace), spec))
    return out


def sample_features(
    t: FeatureTensor,
    n: int,
    mode: str = "random_uniform",
    rng: np.random.Generator | None = None,
) -> FeatureSample:
    """Draw n distinct grid coordinates and gather their feature vectors.

    ``random_uniform`` samples cells without replacement; ``jittered_grid``
    lays a near-square lattice over the grid with one shared random offset.
    """
    if n < 1 or n > t.n_cells:
        raise ValueError(f"cannot sample {n} of {t.n_cells} cells")
    rng = rng or np.random.default_rng()
    if mode == "random_uniform":
        flat = np.sort(rng.choice(t.n_cells, size=n, replace=False))
    elif mode == "jittered_grid":
        gx = max(1, int(np.ceil(np.sqrt(n * t.grid_w / t.grid_h))))
        gy = int(np.ceil(n / gx))
        sy, sx = t.grid_h / gy, t.grid_w / gx
        oy, ox = rng.random() * sy, rng.random() * sx
        rr = np.minimum(np.floor(oy + np.arange(gy) * sy), t.grid_h - 1).astype(np.int64)
        cc = np.minimum(np.floor(ox + np.arange(gx) * sx), t.grid_w - 1).astype(np.int64)
        flat = (rr[:, None] * t.grid_w + cc[None, :]).reshape(-1)[:n]
    else:
        raise ValueError(f"unknown sampling mode {mode!r}")
    coords = np.stack([flat // t.grid_w, flat % t.grid_w], axis=1)
    return FeatureSample(coords, ad.gather_rows(t.data, flat))


# ---- external feature import ------------------------------------------------

_MAGIC = b"FEAT1"


def save_features(t: FeatureTensor, path) -> None:
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<III", t.grid_h, t.grid_w, t.dim))
        fh.write(np.ascontiguousarray(t.data.data, dtype="<f4").tobytes())


def load_external_features(path) -> FeatureTensor:
    """Read the FEAT1 binary format written by :func:`save_features`."""
    with open(path, "rb") as fh:
        magic = fh.read(5)
        if magic != _MAGIC:
            raise FeatureFileError(f"bad magic {magic!r}, expected {_MAGIC!r}")
        header = fh.read(12)
        if len(header) != 12:
            raise FeatureFileError("truncated header")
        gh, gw, dim = struct.unpack("<III", header)
        if gh == 0 or gw == 0 or dim == 0:
            raise FeatureFileError(f"zero dimension in header ({gh}, {gw}, {dim})")
        payload = fh.read()
    expected = gh * gw * dim * 4
    if len(payload) != expected:
        raise FeatureFileError(
            f"payload is {len(payload)} bytes, header implies {expected}"
        )
    data = np.frombuffer(payload, dtype="<f4").astype(np.float64).reshape(gh * gw, dim)
    return FeatureTensor(gh, gw, dim, ad.Tensor(data))
