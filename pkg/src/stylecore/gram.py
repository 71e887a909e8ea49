"""Channel co-occurrence (Gram) style loss and plain L2 content loss.

Used standalone as the classic optimization baseline and as the alternate
base objective for the deformable pipeline.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from . import autodiff as ad


def gram_matrix(layer) -> ad.Tensor:
    """Uncentered, unnormalized FxF co-occurrence over spatial positions.

    ``layer`` is HxWxF (or already flattened KxF).
    """
    t = ad.as_tensor(layer)
    if t.ndim == 3:
        h, w, f = t.shape
        t = ad.reshape(t, (h * w, f))
    elif t.ndim != 2:
        raise ValueError("gram_matrix expects HxWxF or KxF activations")
    if t.shape[0] == 0:
        raise ValueError("empty activation layer")
    return ad.matmul(ad.transpose(t), t)


def gram_style_loss(o_layers: Sequence, s_layers: Sequence, weights: Sequence[float] | None = None) -> ad.Tensor:
    """Weighted sum of squared Frobenius gaps between per-layer Gram
    matrices."""
    if len(o_layers) != len(s_layers):
        raise ValueError("layer lists must match")
    if weights is None:
        weights = [1.0] * len(o_layers)
    if len(weights) != len(o_layers):
        raise ValueError("one weight per layer required")
    total = ad.Tensor(0.0)
    for o, s, w in zip(o_layers, s_layers, weights):
        diff = ad.sub(gram_matrix(o), gram_matrix(s))
        total = ad.add(total, ad.mul(ad.tsum(ad.mul(diff, diff)), float(w)))
    return total


def l2_content_loss(o_layer, c_layer) -> ad.Tensor:
    """Squared Frobenius distance between one pair of activation layers."""
    o, c = ad.as_tensor(o_layer), ad.as_tensor(c_layer)
    if o.shape != c.shape:
        raise ValueError(f"layer shape mismatch {o.shape} vs {c.shape}")
    diff = ad.sub(o, c)
    return ad.tsum(ad.mul(diff, diff))
