"""Scripted experts that demonstrate each task from ground-truth state.

The reach experts and the plate expert are memoryless (static feedback).
The box expert is deliberately dynamic: it runs a two-mode
approach-then-push controller whose push mode adds an integral term on the
box's lateral line error, so its action at a given state depends on history.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .tasks import TaskSpec, reach_target
from .world import Action, WorldState, rot2, EE_STEP_MAX, YAW_STEP_MAX

GRIPPER_CMD = 0.05

# push_box controller gains
BOX_KP_THETA = 0.40          # m of finger lever per rad of orientation error
BOX_KP_LAT = 0.06            # m of lever per m of lateral line error
BOX_KI_LAT = 0.012           # m of lever per accumulated m-step of lateral error
BOX_I_CLAMP = 0.6            # anti-windup bound on the accumulated error
BOX_PRESS = 0.006            # m the finger drives into the face per step


def _wrap(a: float) -> float:
    return float((a + np.pi) % (2 * np.pi) - np.pi)


def _clip_norm(v, max_norm):
    v = np.asarray(v, dtype=np.float64)
    n = float(np.linalg.norm(v))
    if n <= max_norm or n == 0.0:
        return v
    return v * (max_norm / n)


POSITION_GAIN = 0.55         # proportional gain of every commanded approach
YAW_GAIN = 0.55


def _toward(state: WorldState, target_xyz, dyaw_err: float = 0.0) -> Action:
    """Proportional step toward a target, capped at the controller rate.

    The proportional zone gives demonstrations a smooth slow-down profile
    near targets instead of a step discontinuity, which matters for cloning.
    """
    dp = _clip_norm(POSITION_GAIN * (np.asarray(target_xyz) - state.ee[:3]),
                    EE_STEP_MAX)
    dyaw = float(np.clip(YAW_GAIN * dyaw_err, -YAW_STEP_MAX, YAW_STEP_MAX))
    return Action(delta_pos=dp, delta_yaw=dyaw, gripper=GRIPPER_CMD)


@dataclass
class ExpertMemory:
    mode: str = "approach"
    integral: float = 0.0
    theta_ref: float | None = None
    line_origin: np.ndarray | None = None
    x_start: float | None = None


def _reach_expert(task: TaskSpec, state: WorldState, want_yaw: bool):
    target = reach_target(task, state)
    yaw_err = _wrap(state.obj[2] - state.ee[3]) if want_yaw else 0.0
    return _toward(state, target, yaw_err)


def _plate_expert(task: TaskSpec, state: WorldState) -> Action:
    c = state.obj[:2]
    goal = np.asarray(task.push_goal_point)
    to_goal = goal - c
    dist_goal = float(np.linalg.norm(to_goal))
    z = task.push_height
    radius = state.shape.radius

    if dist_goal <= 0.003:
        # done: hover just off the rim so late kicks stay recoverable
        away = state.ee[:2] - c
        n = np.linalg.norm(away)
        away = away / n if n > 1e-9 else np.array([-1.0, 0.0])
        spot = c + away * (radius + 0.03)
        return _toward(state, [spot[0], spot[1], z])

    ghat = to_goal / dist_goal
    behind = c - ghat * (radius + 0.008)
    ee = state.ee[:2]
    rel = ee - c
    rel_n = float(np.linalg.norm(rel))

    if float(np.linalg.norm(ee - behind)) > 0.012:
        ang_ee = np.arctan2(rel[1], rel[0]) if rel_n > 1e-9 else np.arctan2(-ghat[1], -ghat[0])
        ang_behind = np.arctan2(-ghat[1], -ghat[0])
        ang_err = _wrap(ang_behind - ang_ee)
        if rel_n < radius + 0.005 or abs(ang_err) > 0.35:
            # circle the plate toward the behind point instead of cutting
            # through it; pure function of state, cannot deadlock
            ang_next = ang_ee + np.clip(ang_err, -0.5, 0.5)
            ring = radius + 0.03
            way = c + ring * np.array([np.cos(ang_next), np.sin(ang_next)])
            return _toward(state, [way[0], way[1], z])
        return _toward(state, [behind[0], behind[1], z])

    # pushing: drive toward the (moving) center; slow down near the goal so
    # the plate is not carried past it
    step = min(EE_STEP_MAX, max(0.002, 0.7 * dist_goal))
    dp = _clip_norm(POSITION_GAIN * (np.array([c[0], c[1], z]) - state.ee[:3]),
                    step)
    return Action(delta_pos=dp, delta_yaw=0.0, gripper=GRIPPER_CMD)


def _box_expert(task: TaskSpec, state: WorldState, mem: ExpertMemory):
    shape = state.shape
    c = state.obj[:2]
    theta = float(state.obj[2])
    z = task.push_height
    if mem.theta_ref is None:
        mem.theta_ref = theta
        mem.x_start = float(state.obj[0])
    theta_err = _wrap(theta - mem.theta_ref)
    disp = float(state.obj[0]) - mem.x_start

    r = rot2(theta)
    q_ee = r.T @ (state.ee[:2] - c)
    back_x = -shape.size_x / 2

    in_push_zone = (back_x - 0.05 <= q_ee[0] <= back_x + 0.02
                    and abs(q_ee[1]) <= shape.size_y / 2 - 0.005)

    if mem.mode == "push" and not in_push_zone:
        mem.mode = "approach"

    if mem.mode == "approach":
        staging = c + r @ np.array([back_x - 0.02, 0.0])
        blocked = (q_ee[0] > back_x - 0.012
                   and abs(q_ee[1]) < shape.size_y / 2 + 0.04)
        if blocked:
            side = 1.0 if q_ee[1] >= 0 else -1.0
            way = c + r @ np.array([back_x - 0.06, side * (shape.size_y / 2 + 0.06)])
            return _toward(state, [way[0], way[1], z]), mem
        if float(np.linalg.norm(state.ee[:2] - staging)) < 0.008 \
                and abs(state.ee[2] - z) < 0.004:
            mem.mode = "push"
            mem.integral = 0.0
            mem.line_origin = c.copy()
        else:
            return _toward(state, [staging[0], staging[1], z]), mem

    # push mode: stay engaged for the rest of the episode. Forward pressure
    # stops once the displacement goal is comfortably exceeded, but the
    # finger keeps riding the back face so orientation kicks are trimmed
    # immediately instead of after a costly re-approach.
    if mem.line_origin is None:
        mem.line_origin = c.copy()
    traveling = disp < task.push_goal_disp + 0.01
    if traveling:
        axis = rot2(mem.theta_ref) @ np.array([1.0, 0.0])
        e = c - mem.line_origin
        lat = float(axis[0] * e[1] - axis[1] * e[0])
        mem.integral = float(np.clip(mem.integral + lat,
                                     -BOX_I_CLAMP, BOX_I_CLAMP))
        press = BOX_PRESS
        lever = (BOX_KP_THETA * theta_err + BOX_KP_LAT * lat
                 + BOX_KI_LAT * mem.integral)
    else:
        # holding: only orientation matters now; line terms would wind up.
        # Trim presses creep forward, so allow them until near the table edge.
        trim = abs(theta_err) > np.deg2rad(0.2) and float(state.obj[0]) < 0.40
        press = 0.004 if trim else 0.0
        lever = BOX_KP_THETA * theta_err
    lever = float(np.clip(lever, -(shape.size_y / 2 - 0.015),
                          shape.size_y / 2 - 0.015))
    target = c + r @ np.array([back_x + press, lever])
    return _toward(state, [target[0], target[1], z]), mem


def expert_action(task: TaskSpec, state: WorldState,
                  memory: ExpertMemory | None = None):
    """One expert step. Returns (action, updated memory). Reach and plate
    experts ignore the memory; the box expert requires it."""
    if memory is None:
        memory = ExpertMemory()
    if task.task_id == "reach_t":
        return _reach_expert(task, state, want_yaw=False), memory
    if task.task_id == "reach_tr":
        return _reach_expert(task, state, want_yaw=True), memory
    if task.task_id == "push_plate":
        return _plate_expert(task, state), memory
    if task.task_id == "push_box":
        return _box_expert(task, state, memory)
    raise ValueError(f"unknown task {task.task_id!r}")


class ExpertPolicy:
    """Adapter exposing the scripted expert through the policy interface
    (reads world truth instead of rendered observations)."""

    needs_world_truth = True
    acts_at_half_rate = False

    def __init__(self, task: TaskSpec):
        self.task = task
        self.memory: ExpertMemory | None = None

    def reset(self):
        self.memory = None

    def act(self, state: WorldState) -> Action:
        action, self.memory = expert_action(self.task, state, self.memory)
        return action
