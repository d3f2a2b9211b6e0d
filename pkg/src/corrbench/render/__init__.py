"""Software renderer: calibrated pinhole cameras over a textured table plane
and a single textured object, producing RGB, metric depth, and object masks."""

from .camera import CameraModel, BehindCameraError, project, backproject, default_rig
from .raster import RenderedView, render
from .imageio import (
    write_ppm,
    read_ppm,
    write_pgm16,
    read_pgm16,
    write_pbm,
    read_pbm,
    DEPTH_SCALE,
)

__all__ = [
    "CameraModel",
    "BehindCameraError",
    "project",
    "backproject",
    "default_rig",
    "RenderedView",
    "render",
    "write_ppm",
    "read_ppm",
    "write_pgm16",
    "read_pgm16",
    "write_pbm",
    "read_pbm",
    "DEPTH_SCALE",
]
