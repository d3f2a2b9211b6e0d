"""Pixel-contrastive descriptor loss.

Matched pixel pairs are pulled together by squared distance; non-matched
pairs are pushed apart by a squared hinge on the distance with margin M:

    L = mean_matches ||dA - dB||^2 + mean_nonmatches max(0, M - ||dA - dB||)^2
"""

from __future__ import annotations

import numpy as np

from .. import numcore as nc

MARGIN = 0.5
_NORM_EPS = 1e-12


def _pairwise_sq_dist(flat_a: nc.Tensor, flat_b: nc.Tensor,
                      idx_a: np.ndarray, idx_b: np.ndarray) -> nc.Tensor:
    da = nc.gather_rows(flat_a, idx_a)
    db = nc.gather_rows(flat_b, idx_b)
    return nc.reduce_sum(nc.square(nc.sub(da, db)), axis=1)


def _flat_index(coords_uv: np.ndarray, width: int) -> np.ndarray:
    return coords_uv[:, 1].astype(np.int64) * width + coords_uv[:, 0].astype(np.int64)


def contrastive_loss(desc_a: nc.Tensor, desc_b: nc.Tensor, matches_a, matches_b,
                     nonmatches_a=None, nonmatches_b=None,
                     margin: float = MARGIN) -> nc.Tensor:
    """desc_a, desc_b: [H, W, D] tensors; coordinates are integer (u, v)."""
    if len(matches_a) == 0:
        raise ValueError("contrastive_loss needs at least one match")
    h, w, d = desc_a.shape
    flat_a = nc.reshape(desc_a, (h * w, d))
    flat_b = nc.reshape(desc_b, (h * w, d))

    sq = _pairwise_sq_dist(flat_a, flat_b, _flat_index(np.asarray(matches_a), w),
                           _flat_index(np.asarray(matches_b), w))
    loss = nc.reduce_mean(sq)

    if nonmatches_a is not None and len(nonmatches_a) > 0:
        sq_nm = _pairwise_sq_dist(flat_a, flat_b,
                                  _flat_index(np.asarray(nonmatches_a), w),
                                  _flat_index(np.asarray(nonmatches_b), w))
        dist = nc.sqrt(sq_nm, eps=_NORM_EPS)
        hinge = nc.relu(nc.affine(dist, -1.0, margin))
        loss = nc.add(loss, nc.reduce_mean(nc.square(hinge)))
    return loss
