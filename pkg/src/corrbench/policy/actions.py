"""Action scaling and the behavior-cloning loss.

The scaled action equalizes 1.0 m of end-effector translation, 0.1 rad of
rotation, and 1.0 m of gripper travel: translation and gripper pass through
in meters, yaw is multiplied by 10. The loss is squared l2 plus 0.1 times l1
on the scaled difference.
"""

from __future__ import annotations

import numpy as np

from .. import numcore as nc
from ..simworld.world import Action

ACTION_DIM = 5
YAW_SCALE = 10.0
L1_WEIGHT = 0.1


def scale_action(action: Action) -> np.ndarray:
    v = action.as_vector()
    return np.concatenate([v[:3], [v[3] * YAW_SCALE], [v[4]]])


def unscale_action(scaled) -> Action:
    s = np.asarray(scaled, dtype=np.float64)
    return Action(delta_pos=s[:3].copy(), delta_yaw=float(s[3] / YAW_SCALE),
                  gripper=float(s[4]))


def scale_action_array(actions: np.ndarray) -> np.ndarray:
    out = np.array(actions, dtype=np.float64)
    out[..., 3] *= YAW_SCALE
    return out


def bc_loss_np(target: np.ndarray, pred: np.ndarray) -> float:
    d = np.asarray(target, dtype=np.float64) - np.asarray(pred, dtype=np.float64)
    return float((d ** 2).sum() + L1_WEIGHT * np.abs(d).sum())


def bc_loss(pred: nc.Tensor, target: nc.Tensor) -> nc.Tensor:
    """Mean over the batch of ||a* - pi||_2^2 + 0.1 ||a* - pi||_1.

    pred and target are [B, 5]; a single action pair may be passed as
    [1, 5]."""
    if pred.shape != target.shape:
        raise nc.ShapeError(f"bc_loss shapes {pred.shape} vs {target.shape}")
    d = nc.sub(pred, target)
    per_sample = nc.add(nc.reduce_sum(nc.square(d), axis=1),
                        nc.affine(nc.reduce_sum(nc.absolute(d), axis=1),
                                  L1_WEIGHT))
    return nc.reduce_mean(per_sample)
