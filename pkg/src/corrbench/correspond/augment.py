"""Affine augmentation of one side of a training pair.

A random rotation/scale/shear about the image center is applied to the image
with bilinear resampling, and the same map is applied to that side's match
coordinates; coordinates leaving the frame drop their pairs (the caller
intersects the keep masks of both sides).
"""

from __future__ import annotations

import numpy as np

from ..imageops import affine_matrix, warp_coords, warp_image

ROTATION_RANGE = np.deg2rad(15.0)
SCALE_RANGE = (0.85, 1.15)
SHEAR_RANGE = 0.1


def sample_affine_params(rng: np.random.Generator):
    return dict(rotation_rad=float(rng.uniform(-ROTATION_RANGE, ROTATION_RANGE)),
                scale=float(rng.uniform(*SCALE_RANGE)),
                shear=float(rng.uniform(-SHEAR_RANGE, SHEAR_RANGE)))


def augment_side(image: np.ndarray, coords_uv: np.ndarray,
                 rng: np.random.Generator | None = None,
                 params: dict | None = None):
    """Warp an image and its pixel coordinates by one random affine map.

    Returns (warped_image, warped_coords [float], keep_mask). Passing
    params overrides the random draw (identity = all-zero rotation/shear,
    scale 1)."""
    if params is None:
        if rng is None:
            raise ValueError("augment_side needs an rng or explicit params")
        params = sample_affine_params(rng)
    mat = affine_matrix(**params)
    h, w = image.shape[:2]
    warped = warp_image(image, mat)
    if len(coords_uv) == 0:
        return warped, coords_uv.astype(np.float64), np.zeros(0, dtype=bool)
    u2, v2, keep = warp_coords(coords_uv[:, 0], coords_uv[:, 1], mat, w, h)
    return warped, np.column_stack([u2, v2]), keep
