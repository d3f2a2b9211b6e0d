"""Shared raster utilities: bilinear sampling and affine warps of images
and pixel coordinates."""

from __future__ import annotations

import numpy as np


def bilinear_sample(img: np.ndarray, u, v) -> np.ndarray:
    """Sample img ([H,W] or [H,W,C]) at continuous pixel coords (u, v).

    Coordinates are clamped to the valid interpolation domain; callers that
    care about out-of-frame samples should bounds-check first.
    """
    h, w = img.shape[:2]
    u = np.clip(np.asarray(u, dtype=np.float64), 0.0, w - 1.0)
    v = np.clip(np.asarray(v, dtype=np.float64), 0.0, h - 1.0)
    u0 = np.minimum(np.floor(u).astype(int), w - 2) if w > 1 else np.zeros_like(u, int)
    v0 = np.minimum(np.floor(v).astype(int), h - 2) if h > 1 else np.zeros_like(v, int)
    fu = u - u0
    fv = v - v0
    if img.ndim == 3:
        fu = fu[..., None]
        fv = fv[..., None]
    top = img[v0, u0] * (1 - fu) + img[v0, u0 + 1] * fu
    bot = img[v0 + 1, u0] * (1 - fu) + img[v0 + 1, u0 + 1] * fu
    return top * (1 - fv) + bot * fv


def affine_matrix(rotation_rad: float = 0.0, scale: float = 1.0,
                  shear: float = 0.0) -> np.ndarray:
    """2x2 pixel-coordinate map. Positive rotation follows the screen
    convention where 90 degrees sends (u, v) -> (v, W-1-u) on a square
    image (rotation about the image center is applied by warp functions)."""
    c, s = np.cos(rotation_rad), np.sin(rotation_rad)
    rot = np.array([[c, s], [-s, c]])
    sh = np.array([[1.0, shear], [0.0, 1.0]])
    return scale * (rot @ sh)


def warp_image(img: np.ndarray, mat: np.ndarray) -> np.ndarray:
    """Apply the affine map about the image center with bilinear resampling.

    Output pixel p receives img[mat^-1 (p - c) + c]. Pixels mapping outside
    the source are filled with 0."""
    h, w = img.shape[:2]
    cu, cv = (w - 1) / 2.0, (h - 1) / 2.0
    inv = np.linalg.inv(mat)
    uu, vv = np.meshgrid(np.arange(w, dtype=np.float64),
                         np.arange(h, dtype=np.float64))
    du = uu - cu
    dv = vv - cv
    src_u = inv[0, 0] * du + inv[0, 1] * dv + cu
    src_v = inv[1, 0] * du + inv[1, 1] * dv + cv
    inside = (src_u >= 0) & (src_u <= w - 1) & (src_v >= 0) & (src_v <= h - 1)
    out = bilinear_sample(img, src_u, src_v)
    if img.ndim == 3:
        out = np.where(inside[..., None], out, 0.0)
    else:
        out = np.where(inside, out, 0.0)
    return out


def warp_coords(u, v, mat: np.ndarray, width: int, height: int):
    """Map pixel coordinates through the affine map about the image center.

    Returns (u2, v2, in_frame)."""
    cu, cv = (width - 1) / 2.0, (height - 1) / 2.0
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    u2 = mat[0, 0] * (u - cu) + mat[0, 1] * (v - cv) + cu
    v2 = mat[1, 0] * (u - cu) + mat[1, 1] * (v - cv) + cv
    in_frame = (u2 >= 0) & (u2 <= width - 1) & (v2 >= 0) & (v2 <= height - 1)
    return u2, v2, in_frame
