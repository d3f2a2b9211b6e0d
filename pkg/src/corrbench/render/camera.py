"""Pinhole camera model and the two-camera rig used throughout the benchmark.

Conventions: world frame has z up and the table surface at z = 0. The camera
frame has +z forward (into the scene), +x right, +y down, so pixel coordinate
u grows rightward and v grows downward. Depth is the camera-frame z
coordinate, not ray length. Pixel centers sit at integer (u, v).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class BehindCameraError(ValueError):
    """Point projected with non-positive camera-frame depth."""


@dataclass
class CameraModel:
    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int
    rotation: np.ndarray      # 3x3, world -> camera
    eye: np.ndarray           # camera center in world coordinates

    _ray_cache: np.ndarray | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        self.rotation = np.asarray(self.rotation, dtype=np.float64)
        self.eye = np.asarray(self.eye, dtype=np.float64)
        if self.fx <= 0 or self.fy <= 0:
            raise ValueError("focal lengths must be positive")
        if not (0 <= self.cx < self.width and 0 <= self.cy < self.height):
            raise ValueError("principal point must lie inside the image")
        rtr = self.rotation @ self.rotation.T
        if not (np.allclose(rtr, np.eye(3), atol=1e-9)
                and abs(np.linalg.det(self.rotation) - 1.0) < 1e-9):
            raise ValueError("rotation must be orthonormal with det +1")

    def world_rays(self) -> np.ndarray:
        """World-frame direction through every pixel center, scaled so the
        camera-frame z component is 1 (depth parameterizes the ray directly).
        Shape [H, W, 3]."""
        if self._ray_cache is None:
            us = np.arange(self.width, dtype=np.float64)
            vs = np.arange(self.height, dtype=np.float64)
            uu, vv = np.meshgrid(us, vs)
            d_cam = np.stack([(uu - self.cx) / self.fx,
                              (vv - self.cy) / self.fy,
                              np.ones_like(uu)], axis=-1)
            self._ray_cache = d_cam @ self.rotation  # (R^T d)^T rows
        return self._ray_cache

    def to_json(self) -> dict:
        return {
            "fx": self.fx, "fy": self.fy, "cx": self.cx, "cy": self.cy,
            "width": self.width, "height": self.height,
            "rotation": self.rotation.tolist(),
            "eye": self.eye.tolist(),
        }

    @staticmethod
    def from_json(d: dict) -> "CameraModel":
        return CameraModel(fx=d["fx"], fy=d["fy"], cx=d["cx"], cy=d["cy"],
                           width=d["width"], height=d["height"],
                           rotation=np.array(d["rotation"]),
                           eye=np.array(d["eye"]))


def look_at(eye, target, width, height, fx, fy=None) -> CameraModel:
    """Camera at `eye` looking toward `target`, image +y pointing down-world."""
    eye = np.asarray(eye, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    forward = target - eye
    forward = forward / np.linalg.norm(forward)
    up_world = np.array([0.0, 0.0, 1.0])
    right = np.cross(forward, -up_world)
    nr = np.linalg.norm(right)
    if nr < 1e-12:
        right = np.array([1.0, 0.0, 0.0])
    else:
        right = right / nr
    down = np.cross(forward, right)
    rotation = np.stack([right, down, forward], axis=0)
    return CameraModel(fx=fx, fy=fy if fy is not None else fx,
                       cx=(width - 1) / 2.0, cy=(height - 1) / 2.0,
                       width=width, height=height,
                       rotation=rotation, eye=eye)


def project(camera: CameraModel, point_world) -> tuple[float, float, float]:
    """World point -> continuous pixel (u, v) and camera-frame depth."""
    p = camera.rotation @ (np.asarray(point_world, dtype=np.float64) - camera.eye)
    if p[2] <= 0:
        raise BehindCameraError(f"point has camera depth {p[2]:.6g}")
    u = camera.fx * p[0] / p[2] + camera.cx
    v = camera.fy * p[1] / p[2] + camera.cy
    return float(u), float(v), float(p[2])


def project_many(camera: CameraModel, points_world: np.ndarray):
    """Vectorized projection; returns (u, v, depth) arrays.

    Raises if any point is at or behind the camera plane."""
    p = (np.asarray(points_world, dtype=np.float64) - camera.eye) @ camera.rotation.T
    if np.any(p[..., 2] <= 0):
        raise BehindCameraError("some points are behind the camera")
    u = camera.fx * p[..., 0] / p[..., 2] + camera.cx
    v = camera.fy * p[..., 1] / p[..., 2] + camera.cy
    return u, v, p[..., 2]


def backproject(camera: CameraModel, u, v, depth) -> np.ndarray:
    """Exact inverse of project for finite positive depth."""
    depth = float(depth)
    if not np.isfinite(depth) or depth <= 0:
        raise ValueError(f"backproject needs finite positive depth, got {depth}")
    d_cam = np.array([(u - camera.cx) / camera.fx * depth,
                      (v - camera.cy) / camera.fy * depth,
                      depth])
    return camera.rotation.T @ d_cam + camera.eye


def backproject_many(camera: CameraModel, u: np.ndarray, v: np.ndarray,
                     depth: np.ndarray) -> np.ndarray:
    d_cam = np.stack([(u - camera.cx) / camera.fx * depth,
                      (v - camera.cy) / camera.fy * depth,
                      np.asarray(depth, dtype=np.float64)], axis=-1)
    return d_cam @ camera.rotation + camera.eye


def backproject_map(camera: CameraModel, depth: np.ndarray) -> np.ndarray:
    """World point for every pixel of a full depth image. Infinite-depth
    pixels produce non-finite coordinates; callers mask them."""
    return camera.eye + camera.world_rays() * depth[..., None]


def default_rig(width: int = 64, height: int = 48, fx: float = 88.0,
                azimuth_deg: float = 30.0, elevation_deg: float = 45.0,
                distance: float = 0.9, target=(0.05, 0.0, 0.0)):
    """Two static cameras at +/- azimuth about the table, sharing a target.

    View 0 is the policy camera. The views overlap enough for cross-view
    correspondence while staying distinct.
    """
    cams = []
    for sign in (+1.0, -1.0):
        az = np.deg2rad(sign * azimuth_deg)
        el = np.deg2rad(elevation_deg)
        offset = np.array([-np.cos(el) * np.cos(az),
                           np.cos(el) * np.sin(az),
                           np.sin(el)]) * distance
        eye = np.asarray(target, dtype=np.float64) + offset
        cams.append(look_at(eye, target, width, height, fx))
    return cams
