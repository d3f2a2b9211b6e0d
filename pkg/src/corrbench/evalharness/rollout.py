"""Closed-loop policy rollouts.

The world runs at 10 Hz. MLP policies act every step; LSTM policies act
every other step with the commanded global-frame setpoint held in between,
matching the 5 Hz training downsampling. Experts (wrapped as policies) read
world truth directly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..render import render
from ..seeding import stream
from ..simworld import (
    Action,
    TaskSpec,
    error_components,
    robot_observation,
    sample_task_config,
    step,
    success,
)


@dataclass
class EpisodeRecord:
    seed: int
    initial: np.ndarray      # object (x, y, theta) at t=0
    succeeded: bool
    score: float
    dt: float                # final translation error, m
    dr: float                # final rotation error, rad

    def to_json(self) -> dict:
        return {"seed": self.seed, "initial": self.initial.tolist(),
                "success": bool(self.succeeded), "score": self.score,
                "dt": self.dt, "dr": self.dr}


def _policy_action(policy, state, start_yaw, cameras):
    if getattr(policy, "needs_world_truth", False):
        return policy.act(state)
    view = None
    if policy.needs_rgb or policy.needs_depth:
        view = render(state, cameras[0], time_index=state.time_index)
    obs = robot_observation(state, start_yaw)
    return policy.act(obs, view=view, obj_pose=state.obj)


def rollout(policy, task: TaskSpec, seed: int, cameras=None,
            split: str = "test") -> EpisodeRecord:
    """Run one evaluation episode. Deterministic given (policy, seed)."""
    rng = stream(seed, "episode")
    state = sample_task_config(task, split, rng)
    ref = state
    start_yaw = float(state.ee[3])
    if hasattr(policy, "reset"):
        policy.reset()
    half_rate = getattr(policy, "acts_at_half_rate", False)
    setpoint = None
    for t in range(task.step_limit):
        if not half_rate or t % 2 == 0 or setpoint is None:
            action = _policy_action(policy, state, start_yaw, cameras)
            setpoint = (state.ee[:3] + action.delta_pos,
                        state.ee[3] + action.delta_yaw, action.gripper)
        else:
            # hold the commanded global-frame setpoint for the off step
            action = Action(delta_pos=setpoint[0] - state.ee[:3],
                            delta_yaw=setpoint[1] - state.ee[3],
                            gripper=setpoint[2])
        state = step(state, action, rng, task.disturbance)
    ok, score = success(task, state, ref)
    dt, dr = error_components(task, state, ref)
    return EpisodeRecord(seed=seed, initial=ref.obj.copy(), succeeded=ok,
                         score=score, dt=dt, dr=dr)
