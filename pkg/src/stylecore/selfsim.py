"""Content loss from pairwise feature self-distance structure.

The pairwise cosine-distance matrix of one sample's features describes the
image's internal layout; comparing column-normalized matrices between the
output and the content keeps relative similarities stable while leaving
absolute feature values free to change.
"""

from __future__ import annotations

import numpy as np

from . import autodiff as ad
from .transport import cosine_distance_matrix, TransportError


def self_sim_matrix(a) -> ad.Tensor:
    """Pairwise uncentered cosine distances of a sample against itself."""
    return cosine_distance_matrix(a, a, center=False).values


def content_loss(o, c) -> ad.Tensor:
    """Mean L1 gap between column-normalized self-distance matrices.

    Rows of ``o`` and ``c`` must be paired: o_i was sampled at the same
    coordinate as c_i.
    """
    d_o = self_sim_matrix(o)
    d_c = self_sim_matrix(c)
    if d_o.shape != d_c.shape:
        raise TransportError("self-similarity matrices must have matching shape")
    for d in (d_o, d_c):
        if float(np.min(np.sum(d.data, axis=0))) < 1e-10:
            raise TransportError(
                "degenerate sample: a self-distance column sums to zero"
            )
    n = d_o.shape[0]
    no = ad.div(d_o, ad.tsum(d_o, axis=0))
    nc = ad.div(d_c, ad.tsum(d_c, axis=0))
    return ad.mul(ad.tsum(ad.absolute(ad.sub(no, nc))), 1.0 / (n * n))
