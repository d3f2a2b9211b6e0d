"""Noise augmentation for feedback training.

The proprioceptive state is perturbed (a rigid Gaussian perturbation of the
end-effector pose plus gripper-width noise) while the action label is
recomputed to reach the original, unchanged global-frame setpoint from the
perturbed state. Images are untouched.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..simworld.world import HAND_POINTS, rot2

SIGMA_TRANSLATION = 0.001          # m
SIGMA_ROTATION = np.deg2rad(1.0)   # rad
SIGMA_GRIPPER = 0.01               # m


@dataclass(frozen=True)
class NoiseSpec:
    sigma_translation: float = SIGMA_TRANSLATION
    sigma_rotation: float = SIGMA_ROTATION
    sigma_gripper: float = SIGMA_GRIPPER

    @property
    def enabled(self) -> bool:
        return (self.sigma_translation > 0 or self.sigma_rotation > 0
                or self.sigma_gripper > 0)

    @staticmethod
    def disabled() -> "NoiseSpec":
        return NoiseSpec(0.0, 0.0, 0.0)


def proprio_from_pose(pos: np.ndarray, yaw: float, start_yaw: float,
                      gripper: float) -> np.ndarray:
    r = rot2(yaw)
    pts = HAND_POINTS.copy()
    pts[:, :2] = pts[:, :2] @ r.T
    pts += pos
    return np.concatenate([pts.reshape(-1), [0.0, 0.0, yaw - start_yaw],
                           [gripper]])


def noise_augment(truth: np.ndarray, action: np.ndarray, start_yaw: float,
                  spec: NoiseSpec, rng: np.random.Generator):
    """One frame's (truth, unscaled action) -> perturbed (o_robot, action).

    truth is the stored 8-float snapshot (ee x y z yaw, gripper, obj pose);
    the returned action reaches the original global setpoint from the
    perturbed state exactly.
    """
    pos = truth[:3]
    yaw = float(truth[3])
    gripper = float(truth[4])
    setpoint_pos = pos + action[:3]
    setpoint_yaw = yaw + action[3]

    d_pos = rng.normal(0.0, spec.sigma_translation, 3) \
        if spec.sigma_translation > 0 else np.zeros(3)
    d_yaw = float(rng.normal(0.0, spec.sigma_rotation)) \
        if spec.sigma_rotation > 0 else 0.0
    d_grip = float(rng.normal(0.0, spec.sigma_gripper)) \
        if spec.sigma_gripper > 0 else 0.0

    pos_p = pos + d_pos
    yaw_p = yaw + d_yaw
    obs = proprio_from_pose(pos_p, yaw_p, start_yaw, gripper + d_grip)
    new_action = np.concatenate([setpoint_pos - pos_p,
                                 [setpoint_yaw - yaw_p], [action[4]]])
    return obs, new_action
