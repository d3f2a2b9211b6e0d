"""World state and deterministic stepping.

The end-effector is a free-floating point finger tracked toward pose
setpoints with per-step rate limits. Object motion is quasi-static: finger
penetration is resolved by translating the object along the contact normal
by the penetration depth plus a lever-arm rotation. External disturbances,
when enabled for the task, kick the object with bounded uniform noise.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

STEP_PERIOD = 0.1            # s; 10 Hz world
EE_STEP_MAX = 0.02           # m per step
YAW_STEP_MAX = 0.05          # rad per step
GRIPPER_STEP_MAX = 0.01      # m per step
GRIPPER_RANGE = (0.0, 0.11)  # m
TABLE_HALF_X = 0.50          # m
TABLE_HALF_Y = 0.40          # m
PUSH_ROTATION_GAIN = 2.0     # rad per meter of lateral lever arm

# three points rigidly attached to the hand frame, meters
HAND_POINTS = np.array([
    [0.0, 0.0, 0.0],
    [0.04, 0.0, 0.02],
    [0.0, 0.04, 0.02],
])


@dataclass(frozen=True)
class ObjectShape:
    kind: str                # "box" or "disc"
    size_x: float = 0.0      # box footprint extent along object x
    size_y: float = 0.0      # box footprint extent along object y
    radius: float = 0.0      # disc radius
    top: float = 0.04        # height of the top face above the table

    def __post_init__(self):
        if self.kind not in ("box", "disc"):
            raise ValueError(f"unknown object kind {self.kind!r}")

    @property
    def circumradius(self) -> float:
        if self.kind == "box":
            return float(np.hypot(self.size_x / 2, self.size_y / 2))
        return self.radius


@dataclass(frozen=True)
class DisturbanceSpec:
    probability: float = 0.0   # per-step chance of a kick
    max_disp: float = 0.0      # uniform per-axis displacement bound, m
    max_rot: float = 0.0       # uniform rotation bound, rad


@dataclass(frozen=True)
class Action:
    delta_pos: np.ndarray      # (3,) m, relative to current ee position
    delta_yaw: float           # rad
    gripper: float             # absolute width setpoint, m

    def as_vector(self) -> np.ndarray:
        return np.concatenate([np.asarray(self.delta_pos, dtype=np.float64),
                               [self.delta_yaw, self.gripper]])

    @staticmethod
    def from_vector(v) -> "Action":
        v = np.asarray(v, dtype=np.float64)
        return Action(delta_pos=v[:3].copy(), delta_yaw=float(v[3]),
                      gripper=float(v[4]))

    @staticmethod
    def zero(gripper: float = 0.05) -> "Action":
        return Action(delta_pos=np.zeros(3), delta_yaw=0.0, gripper=gripper)


@dataclass(frozen=True)
class WorldState:
    ee: np.ndarray             # (4,) x, y, z, yaw
    gripper: float
    obj: np.ndarray            # (3,) x, y, theta
    shape: ObjectShape
    time_index: int = 0
    step_period: float = STEP_PERIOD
    clamped: bool = False      # object pose hit the table bounds this step

    def copy(self) -> "WorldState":
        return replace(self, ee=self.ee.copy(), obj=self.obj.copy())


def rot2(theta: float) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]])


def _clip_norm(v: np.ndarray, max_norm: float) -> np.ndarray:
    n = float(np.linalg.norm(v))
    if n <= max_norm or n == 0.0:
        return v
    return v * (max_norm / n)


def _resolve_push(obj: np.ndarray, shape: ObjectShape, finger_xy: np.ndarray):
    """Quasi-static contact: returns (new_obj_pose, contact_happened)."""
    c = obj[:2]
    theta = obj[2]
    if shape.kind == "box":
        q = rot2(-theta) @ (finger_xy - c)
        dx = shape.size_x / 2 - abs(q[0])
        dy = shape.size_y / 2 - abs(q[1])
        if dx <= 0 or dy <= 0:
            return obj, False
        # the object separates from the finger along the least-penetrated axis
        if dx <= dy:
            depth, n_obj = dx, np.array([1.0 if q[0] <= 0 else -1.0, 0.0])
        else:
            depth, n_obj = dy, np.array([0.0, 1.0 if q[1] <= 0 else -1.0])
        n_world = rot2(theta) @ n_obj
    else:
        e = finger_xy - c
        dist = float(np.linalg.norm(e))
        if dist >= shape.radius:
            return obj, False
        depth = shape.radius - dist
        n_world = -e / dist if dist > 1e-12 else np.array([1.0, 0.0])
    lever = finger_xy - c
    dtheta = PUSH_ROTATION_GAIN * (lever[0] * n_world[1] - lever[1] * n_world[0])
    new = obj.copy()
    new[:2] = c + depth * n_world
    new[2] = theta + dtheta
    return new, True


def step(state: WorldState, action: Action, rng: np.random.Generator | None = None,
         disturbance: DisturbanceSpec | None = None) -> WorldState:
    """Advance the world one control period."""
    ee = state.ee.copy()
    p_cmd = ee[:3] + np.asarray(action.delta_pos, dtype=np.float64)
    ee[:3] = ee[:3] + _clip_norm(p_cmd - ee[:3], EE_STEP_MAX)
    ee[3] = ee[3] + float(np.clip(action.delta_yaw, -YAW_STEP_MAX, YAW_STEP_MAX))

    w_cmd = float(np.clip(action.gripper, *GRIPPER_RANGE))
    gripper = state.gripper + float(np.clip(w_cmd - state.gripper,
                                            -GRIPPER_STEP_MAX, GRIPPER_STEP_MAX))

    obj = state.obj.copy()
    if 0.0 <= ee[2] <= state.shape.top:
        obj, _ = _resolve_push(obj, state.shape, ee[:2])

    if disturbance is not None and disturbance.probability > 0.0:
        if rng is None:
            raise ValueError("disturbances enabled but no rng supplied")
        if rng.random() < disturbance.probability:
            obj[0] += rng.uniform(-disturbance.max_disp, disturbance.max_disp)
            obj[1] += rng.uniform(-disturbance.max_disp, disturbance.max_disp)
            obj[2] += rng.uniform(-disturbance.max_rot, disturbance.max_rot)

    r = state.shape.circumradius
    lim_x, lim_y = TABLE_HALF_X - r, TABLE_HALF_Y - r
    clamped = bool(abs(obj[0]) > lim_x or abs(obj[1]) > lim_y)
    obj[0] = np.clip(obj[0], -lim_x, lim_x)
    obj[1] = np.clip(obj[1], -lim_y, lim_y)

    return WorldState(ee=ee, gripper=gripper, obj=obj, shape=state.shape,
                      time_index=state.time_index + 1,
                      step_period=state.step_period, clamped=clamped)


def hand_points_world(ee: np.ndarray) -> np.ndarray:
    """The three hand-frame points under the current ee pose, [3, 3]."""
    r = rot2(ee[3])
    pts = HAND_POINTS.copy()
    pts[:, :2] = pts[:, :2] @ r.T
    return pts + ee[:3]


def robot_observation(state: WorldState, start_yaw: float) -> np.ndarray:
    """13-vector: three hand points (9), axis-angle rotation relative to the
    episode's starting orientation (3, vertical component only), gripper (1)."""
    pts = hand_points_world(state.ee)
    axis_angle = np.array([0.0, 0.0, state.ee[3] - start_yaw])
    return np.concatenate([pts.reshape(-1), axis_angle, [state.gripper]])
