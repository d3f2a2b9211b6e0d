"""The four benchmark tasks: configuration distributions, success criteria,
and per-task constants.

Object positions are drawn from a truncated Gaussian (sigma_x=5cm,
sigma_y=10cm) over a 40cm x 10cm region centered on the table for training
configurations, and uniformly over the same region for test configurations.
Rotation is uniform in [-30, 30] degrees except reach_t, which fixes it at 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .world import (
    DisturbanceSpec,
    ObjectShape,
    WorldState,
    rot2,
)

TASK_IDS = ("reach_t", "reach_tr", "push_box", "push_plate")

REGION_X = 0.40              # m, full extent of the configuration region
REGION_Y = 0.10
TRAIN_SIGMA_X = 0.05
TRAIN_SIGMA_Y = 0.10
ROT_RANGE = np.deg2rad(30.0)

EE_HOME = np.array([-0.32, 0.0, 0.15, 0.0])
GRIPPER_HOME = 0.05

BOX_SHAPE = ObjectShape(kind="box", size_x=0.12, size_y=0.08, top=0.04)
PLATE_SHAPE = ObjectShape(kind="disc", radius=0.09, top=0.02)


@dataclass(frozen=True)
class TaskSpec:
    task_id: str
    shape: ObjectShape
    trans_thresh: float                  # m
    rot_thresh: float | None             # rad, None when rotation is unscored
    step_limit: int
    disturbance: DisturbanceSpec
    rot_range: float                     # rad, half-width of the theta draw
    # reach tasks: target = object pose composed with this object-frame offset
    target_offset: tuple = (0.04, 0.0, 0.10)
    # push_box: required +x displacement of the object, m
    push_goal_disp: float = 0.15
    # push_plate: world goal point for the object center
    push_goal_point: tuple = (0.28, 0.0)
    push_height: float = 0.02
    region_x: float = REGION_X
    region_y: float = REGION_Y
    sigma_x: float = TRAIN_SIGMA_X
    sigma_y: float = TRAIN_SIGMA_Y

    @property
    def score_epsilon(self) -> float:
        """Threshold sum in score units (cm + degrees)."""
        eps = 0.0
        if self.task_id != "push_box":
            eps += self.trans_thresh * 100.0
        if self.rot_thresh is not None:
            eps += np.rad2deg(self.rot_thresh)
        return eps


_DEFAULTS = {
    "reach_t": dict(
        shape=BOX_SHAPE, trans_thresh=0.012, rot_thresh=None, step_limit=50,
        disturbance=DisturbanceSpec(), rot_range=0.0,
    ),
    "reach_tr": dict(
        shape=BOX_SHAPE, trans_thresh=0.012, rot_thresh=np.deg2rad(2.0),
        step_limit=60, disturbance=DisturbanceSpec(), rot_range=ROT_RANGE,
    ),
    "push_box": dict(
        shape=BOX_SHAPE, trans_thresh=0.0, rot_thresh=np.deg2rad(2.0),
        step_limit=160,
        disturbance=DisturbanceSpec(probability=0.08, max_disp=0.005,
                                    max_rot=np.deg2rad(1.5)),
        rot_range=ROT_RANGE, push_height=0.02,
    ),
    "push_plate": dict(
        shape=PLATE_SHAPE, trans_thresh=0.010, rot_thresh=None, step_limit=140,
        disturbance=DisturbanceSpec(probability=0.02, max_disp=0.004,
                                    max_rot=np.deg2rad(1.5)),
        rot_range=ROT_RANGE, push_height=0.012,
    ),
}


def make_task(task_id: str, **overrides) -> TaskSpec:
    if task_id not in _DEFAULTS:
        raise ValueError(f"unknown task {task_id!r}; known: {TASK_IDS}")
    kw = dict(_DEFAULTS[task_id])
    kw.update(overrides)
    return TaskSpec(task_id=task_id, **kw)


def _truncated_normal(rng, sigma, half_extent):
    while True:
        x = rng.normal(0.0, sigma)
        if abs(x) <= half_extent:
            return x


def sample_task_config(task: TaskSpec, split: str,
                       rng: np.random.Generator) -> WorldState:
    """Draw an initial world state for the given split."""
    if split not in ("train", "test"):
        raise ValueError(f"split must be 'train' or 'test', got {split!r}")
    hx, hy = task.region_x / 2, task.region_y / 2
    if split == "train":
        x = _truncated_normal(rng, task.sigma_x, hx)
        y = _truncated_normal(rng, task.sigma_y, hy)
    else:
        x = rng.uniform(-hx, hx)
        y = rng.uniform(-hy, hy)
    theta = rng.uniform(-task.rot_range, task.rot_range) if task.rot_range > 0 else 0.0
    return WorldState(ee=EE_HOME.copy(), gripper=GRIPPER_HOME,
                      obj=np.array([x, y, theta]), shape=task.shape)


def reach_target(task: TaskSpec, state: WorldState) -> np.ndarray:
    """World-frame 3D reach target: object pose composed with the task's
    object-frame offset."""
    off = np.asarray(task.target_offset)
    xy = state.obj[:2] + rot2(state.obj[2]) @ off[:2]
    return np.array([xy[0], xy[1], off[2]])


def _wrap_angle(a: float) -> float:
    return float((a + np.pi) % (2 * np.pi) - np.pi)


def error_components(task: TaskSpec, final: WorldState, ref: WorldState):
    """Final translation error (m) and rotation error (rad) for the task.

    push_box's translation error is the displacement shortfall against the
    goal; rotation-free tasks report 0 rotation error."""
    if task.task_id in ("reach_t", "reach_tr"):
        target = reach_target(task, final)
        dt = float(np.linalg.norm(final.ee[:3] - target))
        dr = abs(_wrap_angle(final.ee[3] - final.obj[2])) \
            if task.rot_thresh is not None else 0.0
    elif task.task_id == "push_box":
        disp = float(final.obj[0] - ref.obj[0])
        dt = max(0.0, task.push_goal_disp - disp)
        dr = abs(_wrap_angle(final.obj[2] - ref.obj[2]))
    elif task.task_id == "push_plate":
        goal = np.asarray(task.push_goal_point)
        dt = float(np.linalg.norm(final.obj[:2] - goal))
        dr = 0.0
    else:
        raise ValueError(f"unknown task {task.task_id!r}")
    return dt, dr


def success(task: TaskSpec, final: WorldState, ref: WorldState):
    """Evaluate the episode's final state against the initial state `ref`.

    Returns (succeeded, score). The score is min(0, -(dt_cm + dr_deg) + eps)
    with eps the task's threshold sum, so 0 is perfect and more negative is
    worse.
    """
    dt, dr = error_components(task, final, ref)
    if task.task_id == "push_box":
        ok = dt == 0.0 and dr <= task.rot_thresh
    elif task.task_id == "reach_tr":
        ok = dt <= task.trans_thresh and dr <= task.rot_thresh
    else:
        ok = dt <= task.trans_thresh
    score = min(0.0, -(dt * 100.0 + np.rad2deg(dr)) + task.score_epsilon)
    return bool(ok), float(score)
