"""2-D convex hulls via the monotone chain construction."""

from __future__ import annotations

import numpy as np


class DegenerateHullError(ValueError):
    """All points collinear; no 2-D hull exists."""


def _cross(o, a, b):
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def convex_hull_2d(points) -> np.ndarray:
    """Counterclockwise hull vertices, collinear boundary points excluded.

    Needs at least 3 non-collinear points."""
    pts = sorted({(float(p[0]), float(p[1])) for p in points})
    if len(pts) < 3:
        raise DegenerateHullError(f"need 3 distinct points, got {len(pts)}")
    lower = []
    for p in pts:
        while len(lower) >= 2 and _cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper = []
    for p in reversed(pts):
        while len(upper) >= 2 and _cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    hull = lower[:-1] + upper[:-1]
    if len(hull) < 3:
        raise DegenerateHullError("all points are collinear")
    return np.array(hull)


def point_in_hull(point, hull: np.ndarray, tol: float = 1e-9) -> bool:
    """Half-plane test against a counterclockwise hull."""
    x, y = float(point[0]), float(point[1])
    n = len(hull)
    for i in range(n):
        a = hull[i]
        b = hull[(i + 1) % n]
        if _cross(a, b, (x, y)) < -tol:
            return False
    return True
