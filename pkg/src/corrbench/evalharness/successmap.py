"""Configuration-space success maps.

Scatter of evaluation configurations over (theta, y), colored by score
clipped to [-2, 0], with training configurations and their convex hull
overlaid. Output is a self-drawn PPM raster plus a CSV with the raw rows
(theta, y, score, success, inside_hull).
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from ..render.imageio import write_ppm
from .hull import DegenerateHullError, convex_hull_2d, point_in_hull
from .suite import EvalReport

SCORE_CLIP = -2.0
IMG_W, IMG_H = 360, 260
MARGIN = 30


def _score_color(score: float) -> np.ndarray:
    """Dark blue at 0 (perfect) through red at the -2 clip."""
    t = np.clip(-score / -SCORE_CLIP, 0.0, 1.0)
    return np.array([0.15 + 0.75 * t, 0.1 + 0.15 * (1 - t), 0.75 * (1 - t) + 0.1])


class _Raster:
    def __init__(self, theta_range, y_range):
        self.img = np.full((IMG_H, IMG_W, 3), 1.0)
        self.theta_range = theta_range
        self.y_range = y_range

    def to_px(self, theta, y):
        t0, t1 = self.theta_range
        y0, y1 = self.y_range
        u = MARGIN + (theta - t0) / (t1 - t0) * (IMG_W - 2 * MARGIN)
        v = IMG_H - MARGIN - (y - y0) / (y1 - y0) * (IMG_H - 2 * MARGIN)
        return int(round(u)), int(round(v))

    def blot(self, u, v, color, r=2):
        self.img[max(0, v - r):v + r + 1, max(0, u - r):u + r + 1] = color

    def cross(self, u, v, color, r=3):
        for d in range(-r, r + 1):
            for du, dv in ((d, d), (d, -d)):
                uu, vv = u + du, v + dv
                if 0 <= uu < IMG_W and 0 <= vv < IMG_H:
                    self.img[vv, uu] = color

    def line(self, p0, p1, color):
        n = int(max(abs(p1[0] - p0[0]), abs(p1[1] - p0[1]))) + 1
        for k in range(n + 1):
            u = int(round(p0[0] + (p1[0] - p0[0]) * k / n))
            v = int(round(p0[1] + (p1[1] - p0[1]) * k / n))
            if 0 <= u < IMG_W and 0 <= v < IMG_H:
                self.img[v, u] = color


def success_map_export(report: EvalReport, out_prefix) -> dict:
    """Write <prefix>.ppm and <prefix>.csv; returns summary statistics."""
    out_prefix = Path(out_prefix)
    eval_pts = np.array([[e.initial[2], e.initial[1]] for e in report.episodes])
    scores = np.array([e.score for e in report.episodes])
    succ = np.array([e.succeeded for e in report.episodes])

    hull = None
    inside = np.zeros(len(eval_pts), dtype=bool)
    if report.train_configs is not None and len(report.train_configs) >= 3:
        train_pts = report.train_configs[:, [2, 1]]
        try:
            hull = convex_hull_2d(train_pts)
            inside = np.array([point_in_hull(p, hull) for p in eval_pts])
        except DegenerateHullError:
            hull = None

    all_theta = eval_pts[:, 0]
    all_y = eval_pts[:, 1]
    pad_t = 0.1 * (all_theta.max() - all_theta.min() + 1e-9)
    pad_y = 0.1 * (all_y.max() - all_y.min() + 1e-9)
    raster = _Raster((all_theta.min() - pad_t, all_theta.max() + pad_t),
                     (all_y.min() - pad_y, all_y.max() + pad_y))
    if hull is not None:
        grey = np.array([0.55, 0.55, 0.55])
        for i in range(len(hull)):
            raster.line(raster.to_px(*hull[i]),
                        raster.to_px(*hull[(i + 1) % len(hull)]), grey)
        for p in report.train_configs:
            u, v = raster.to_px(p[2], p[1])
            raster.cross(u, v, np.array([0.4, 0.4, 0.4]))
    for p, s in zip(eval_pts, scores):
        u, v = raster.to_px(p[0], p[1])
        raster.blot(u, v, _score_color(max(s, SCORE_CLIP)))
    write_ppm(out_prefix.with_suffix(".ppm"), raster.img)

    lines = ["theta,y,score,success,inside_hull"]
    for p, s, ok, ins in zip(eval_pts, scores, succ, inside):
        lines.append(f"{p[0]:.6f},{p[1]:.6f},{s:.4f},{int(ok)},{int(ins)}")
    out_prefix.with_suffix(".csv").write_text("\n".join(lines) + "\n")

    n_in = int(inside.sum())
    n_out = len(inside) - n_in
    fail_in = float((~succ[inside]).mean()) if n_in else float("nan")
    fail_out = float((~succ[~inside]).mean()) if n_out else float("nan")
    return {
        "n_inside": n_in, "n_outside": n_out,
        "failure_rate_inside": fail_in,
        "failure_rate_outside": fail_out,
        "ppm": str(out_prefix.with_suffix(".ppm")),
        "csv": str(out_prefix.with_suffix(".csv")),
    }
