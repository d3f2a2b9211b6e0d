"""Ray-cast rasterization of the table plane and the object's top face.

Every pixel casts a ray through its center and keeps the nearest hit
(a two-surface depth buffer), which makes depth exact at pixel centers:
backprojecting (u, v, depth) lands on the generating surface to machine
precision. Textures are smooth band-limited functions of surface
coordinates, anchored to the object frame so they move rigidly with it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..simworld.world import WorldState, TABLE_HALF_X, TABLE_HALF_Y
from .camera import CameraModel

LIGHT_INTENSITY = 0.92  # flat top-face lighting term applied to all surfaces


@dataclass
class RenderedView:
    rgb: np.ndarray            # [H, W, 3] in [0, 1]
    depth: np.ndarray          # [H, W] m, +inf where empty
    mask: np.ndarray           # [H, W] bool, object pixels
    camera: CameraModel
    time_index: int = 0


class _SineNoise:
    """Seeded sum-of-sinusoids field: smooth, cheap, deterministic."""

    def __init__(self, seed: int, n: int = 10, freq: float = 40.0):
        rng = np.random.Generator(np.random.PCG64(seed))
        self.kx = rng.uniform(-freq, freq, n)
        self.ky = rng.uniform(-freq, freq, n)
        self.phase = rng.uniform(0, 2 * np.pi, n)
        self.amp = rng.uniform(0.5, 1.0, n)
        self.amp /= self.amp.sum()

    def __call__(self, x, y):
        acc = np.zeros(np.broadcast(x, y).shape)
        for kx, ky, ph, a in zip(self.kx, self.ky, self.phase, self.amp):
            acc += a * np.sin(kx * x + ky * y + ph)
        return acc


_TABLE_NOISE = [_SineNoise(101, freq=18.0), _SineNoise(102, freq=45.0),
                _SineNoise(103, freq=30.0)]
_BOX_NOISE = [_SineNoise(201, freq=90.0), _SineNoise(202, freq=90.0),
              _SineNoise(203, freq=90.0)]
_PLATE_NOISE = _SineNoise(301, freq=70.0)


def _smooth_checker(x, y, cell: float, sharpness: float = 1.5):
    """Checkerboard with soft edges (in [-1, 1]); gradients stay spread over
    roughly a pixel at the default camera scale so sub-pixel motion changes
    colors continuously."""
    gx = np.tanh(np.sin(2 * np.pi * x / cell) * sharpness)
    gy = np.tanh(np.sin(2 * np.pi * y / cell) * sharpness)
    return gx * gy


def table_color(x, y):
    """Busy tabletop sharing the box's texture family (its own checker cell
    and noise), so appearance alone does not separate object from
    background; the correspondence loss has to learn that separation."""
    checker = _smooth_checker(x + 0.013, y + 0.007, cell=0.065)
    base = 0.46 + 0.10 * _TABLE_NOISE[0](x, y)
    rgb = np.stack([
        base + 0.17 * checker + 0.07 * _TABLE_NOISE[1](x, y),
        base * 0.94 + 0.15 * checker + 0.07 * _TABLE_NOISE[2](x, y),
        base * 0.82 - 0.12 * checker + 0.05 * _TABLE_NOISE[1](y, x),
    ], axis=-1)
    return np.clip(rgb * LIGHT_INTENSITY, 0.0, 1.0)


def box_color(qx, qy, size_x, size_y):
    """High-contrast pattern over the box top, anchored to the object frame.

    The hue ramps along both axes break every symmetry, so each surface
    point has a distinctive appearance."""
    checker = _smooth_checker(qx + size_x / 2, qy + size_y / 2, cell=0.05)
    rx = qx / size_x + 0.5
    ry = qy / size_y + 0.5
    r = 0.55 + 0.30 * checker * (0.4 + 0.6 * rx) + 0.12 * _BOX_NOISE[0](qx, qy)
    g = 0.45 + 0.28 * checker * (1.0 - 0.8 * ry) + 0.25 * (1 - rx) \
        + 0.12 * _BOX_NOISE[1](qx, qy)
    b = 0.30 + 0.45 * ry - 0.20 * checker + 0.12 * _BOX_NOISE[2](qx, qy)
    rgb = np.stack([r, g, b], axis=-1)
    return np.clip(rgb * LIGHT_INTENSITY, 0.0, 1.0)


def plate_color(qx, qy, radius):
    """Deliberately low-contrast radial pattern over the plate."""
    rr = np.sqrt(qx * qx + qy * qy)
    rings = 0.05 * np.cos(2 * np.pi * rr / 0.03)
    wedge = 0.025 * np.cos(3.0 * np.arctan2(qy, qx + 1e-12))
    rim = np.where(rr > radius * 0.82, -0.06, 0.0)
    base = 0.62 + rings + wedge + rim + 0.015 * _PLATE_NOISE(qx, qy)
    rgb = np.stack([base, base * 0.98, base * 0.94], axis=-1)
    return np.clip(rgb * LIGHT_INTENSITY, 0.0, 1.0)


def render(world: WorldState, camera: CameraModel, time_index: int | None = None,
           gain: float = 1.0) -> RenderedView:
    """Rasterize one view. `gain` optionally applies per-camera photometric
    jitter (1.0 = off)."""
    rays = camera.world_rays()                       # [H, W, 3], z-depth param
    h, w = rays.shape[:2]
    eye = camera.eye
    dz = rays[..., 2]

    depth = np.full((h, w), np.inf)
    rgb = np.zeros((h, w, 3))
    mask = np.zeros((h, w), dtype=bool)

    with np.errstate(divide="ignore", invalid="ignore"):
        # table plane z = 0
        s_table = np.where(dz < 0, -eye[2] / dz, np.inf)
        px = eye[0] + s_table * rays[..., 0]
        py = eye[1] + s_table * rays[..., 1]
        on_table = ((s_table > 0) & np.isfinite(s_table)
                    & (np.abs(px) <= TABLE_HALF_X) & (np.abs(py) <= TABLE_HALF_Y))
        hit = on_table & (s_table < depth)
        depth[hit] = s_table[hit]
        rgb[hit] = table_color(px[hit], py[hit])

        # object top face at z = shape.top
        top = world.shape.top
        s_obj = np.where(dz != 0, (top - eye[2]) / dz, np.inf)
        ox = eye[0] + s_obj * rays[..., 0] - world.obj[0]
        oy = eye[1] + s_obj * rays[..., 1] - world.obj[1]
        c, s = np.cos(world.obj[2]), np.sin(world.obj[2])
        qx = c * ox + s * oy
        qy = -s * ox + c * oy
        if world.shape.kind == "box":
            inside = ((np.abs(qx) <= world.shape.size_x / 2)
                      & (np.abs(qy) <= world.shape.size_y / 2))
        else:
            inside = qx * qx + qy * qy <= world.shape.radius ** 2
        obj_hit = (s_obj > 0) & np.isfinite(s_obj) & inside & (s_obj < depth)
        depth[obj_hit] = s_obj[obj_hit]
        if world.shape.kind == "box":
            rgb[obj_hit] = box_color(qx[obj_hit], qy[obj_hit],
                                     world.shape.size_x, world.shape.size_y)
        else:
            rgb[obj_hit] = plate_color(qx[obj_hit], qy[obj_hit],
                                       world.shape.radius)
        mask = obj_hit

    if gain != 1.0:
        rgb = np.clip(rgb * gain, 0.0, 1.0)
    return RenderedView(rgb=rgb, depth=depth, mask=mask, camera=camera,
                        time_index=world.time_index if time_index is None
                        else time_index)
