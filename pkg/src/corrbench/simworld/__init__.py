"""Deterministic planar tabletop world: a rate-limited free-floating
end-effector, one quasi-statically pushed object, per-task disturbances,
the four benchmark tasks and their scripted experts."""

from .world import (
    Action,
    WorldState,
    ObjectShape,
    DisturbanceSpec,
    step,
    robot_observation,
    HAND_POINTS,
    EE_STEP_MAX,
    YAW_STEP_MAX,
    GRIPPER_STEP_MAX,
    GRIPPER_RANGE,
    TABLE_HALF_X,
    TABLE_HALF_Y,
    STEP_PERIOD,
)
from .tasks import (TaskSpec, make_task, TASK_IDS, sample_task_config,
                    success, error_components, reach_target)
from .experts import expert_action, ExpertPolicy

__all__ = [
    "Action",
    "WorldState",
    "ObjectShape",
    "DisturbanceSpec",
    "step",
    "robot_observation",
    "HAND_POINTS",
    "EE_STEP_MAX",
    "YAW_STEP_MAX",
    "GRIPPER_STEP_MAX",
    "GRIPPER_RANGE",
    "TABLE_HALF_X",
    "TABLE_HALF_Y",
    "STEP_PERIOD",
    "TaskSpec",
    "make_task",
    "TASK_IDS",
    "sample_task_config",
    "success",
    "error_components",
    "reach_target",
    "expert_action",
    "ExpertPolicy",
]
