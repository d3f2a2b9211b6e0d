"""Cross-view correspondence mining.

Matches come from geometry alone: sample object-mask pixels in view A,
backproject through A's depth, project into view B, and round to the nearest
pixel. A candidate is rejected when it leaves B's frame, when B's depth
disagrees with the reprojected depth (occlusion), or when the two pixels'
colors disagree beyond the photometric threshold. Non-matches pair each
surviving A pixel with random B pixels far from the true correspondence,
half on the object and half on the background.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..render.camera import backproject_many, project_many
from ..render.raster import RenderedView

DEPTH_TOLERANCE = 0.01        # m of reprojected-depth disagreement (occlusion)
PHOTOMETRIC_TOLERANCE = 0.2   # per-channel L-inf color disagreement
# px separation from the true correspondence; must exceed the 3 px accuracy
# radius while staying satisfiable on a ~10 px object footprint
MIN_NONMATCH_DIST = 4.0


@dataclass
class MatchSet:
    pair_id: tuple
    matches_a: np.ndarray        # [M, 2] integer (u, v) in view A
    matches_b: np.ndarray        # [M, 2] integer (u, v) in view B
    nonmatches_a: np.ndarray     # [K, 2]
    nonmatches_b: np.ndarray     # [K, 2]
    nonmatch_on_object: np.ndarray = field(
        default_factory=lambda: np.zeros(0, dtype=bool))
    shortfall: bool = False
    n_requested: int = 0

    def __len__(self):
        return len(self.matches_a)


def _sample_far_pixels(rng, candidates_uv: np.ndarray, ref_uv: np.ndarray,
                       n: int, min_dist: float) -> np.ndarray:
    """Pick n pixels from candidates at least min_dist from ref (per row).

    Vectorized rejection sampling in rounds; rows that keep failing fall
    back to their last draw."""
    m = len(candidates_uv)
    out = candidates_uv[rng.integers(m, size=n)]
    bad = np.hypot(out[:, 0] - ref_uv[:, 0], out[:, 1] - ref_uv[:, 1]) < min_dist
    for _ in range(16):
        k = int(bad.sum())
        if k == 0:
            break
        redraw = candidates_uv[rng.integers(m, size=k)]
        out[bad] = redraw
        still = np.hypot(out[:, 0] - ref_uv[:, 0],
                         out[:, 1] - ref_uv[:, 1]) < min_dist
        bad &= still
    return out.astype(np.int64)


def mine_matches(view_a: RenderedView, view_b: RenderedView, n_matches: int,
                 n_nonmatches: int, rng: np.random.Generator,
                 depth_tol: float = DEPTH_TOLERANCE,
                 photo_tol: float = PHOTOMETRIC_TOLERANCE,
                 min_nonmatch_dist: float = MIN_NONMATCH_DIST) -> MatchSet:
    if view_a.time_index != view_b.time_index:
        raise ValueError("views are not time-synchronized "
                         f"({view_a.time_index} vs {view_b.time_index})")
    h, w = view_a.mask.shape
    va, ua = np.nonzero(view_a.mask)
    pair_id = (id(view_a), id(view_b))
    if len(ua) == 0:
        return MatchSet(pair_id, np.empty((0, 2), np.int64),
                        np.empty((0, 2), np.int64), np.empty((0, 2), np.int64),
                        np.empty((0, 2), np.int64), shortfall=True,
                        n_requested=n_matches)
    # consider the whole mask in random order; the first n_matches survivors
    # are kept, so isolated rejections do not shortfall the pair
    pick = rng.permutation(len(ua))
    ua, va = ua[pick], va[pick]

    depths = view_a.depth[va, ua]
    world = backproject_many(view_a.camera, ua.astype(float), va.astype(float),
                             depths)
    ub_f, vb_f, db = project_many(view_b.camera, world)
    ub = np.round(ub_f).astype(np.int64)
    vb = np.round(vb_f).astype(np.int64)

    keep = (ub >= 0) & (ub < w) & (vb >= 0) & (vb < h)
    # occlusion: view B's depth at the target pixel must agree with the
    # reprojected depth (infinite depth disagrees by construction)
    db_img = np.where(keep, view_b.depth[vb.clip(0, h - 1), ub.clip(0, w - 1)],
                      np.inf)
    with np.errstate(invalid="ignore"):
        depth_ok = np.abs(db_img - db) <= depth_tol
    keep &= np.where(np.isfinite(db_img), depth_ok, False)
    # photometric rejection
    ca = view_a.rgb[va, ua]
    cb = view_b.rgb[vb.clip(0, h - 1), ub.clip(0, w - 1)]
    keep &= np.abs(ca - cb).max(axis=1) <= photo_tol

    ma = np.column_stack([ua[keep], va[keep]])[:n_matches]
    mb = np.column_stack([ub[keep], vb[keep]])[:n_matches]
    shortfall = len(ma) < n_matches

    if len(ma) == 0:
        return MatchSet(pair_id, ma, mb, np.empty((0, 2), np.int64),
                        np.empty((0, 2), np.int64), shortfall=True,
                        n_requested=n_matches)

    # non-matches: cycle the surviving A pixels, half on-object, half off
    vb_obj, ub_obj = np.nonzero(view_b.mask)
    vb_bg, ub_bg = np.nonzero(~view_b.mask)
    obj_cands = np.column_stack([ub_obj, vb_obj])
    bg_cands = np.column_stack([ub_bg, vb_bg])
    reps = int(np.ceil(n_nonmatches / len(ma)))
    idx = np.tile(np.arange(len(ma)), reps)[:n_nonmatches]
    n_obj = n_nonmatches // 2
    on_object = np.zeros(n_nonmatches, dtype=bool)
    on_object[:n_obj] = True
    nm_b = np.empty((n_nonmatches, 2), dtype=np.int64)
    if len(obj_cands) and n_obj:
        nm_b[:n_obj] = _sample_far_pixels(rng, obj_cands, mb[idx[:n_obj]],
                                          n_obj, min_nonmatch_dist)
    elif n_obj:
        nm_b[:n_obj] = _sample_far_pixels(rng, bg_cands, mb[idx[:n_obj]],
                                          n_obj, min_nonmatch_dist)
        on_object[:n_obj] = False
    nm_b[n_obj:] = _sample_far_pixels(rng, bg_cands, mb[idx[n_obj:]],
                                      n_nonmatches - n_obj, min_nonmatch_dist)
    return MatchSet(pair_id, ma, mb, ma[idx], nm_b,
                    nonmatch_on_object=on_object, shortfall=shortfall,
                    n_requested=n_matches)
