import numpy as np
import pytest

from corrbench.seeding import stream
from corrbench.simworld import (
    Action,
    DisturbanceSpec,
    ObjectShape,
    WorldState,
    expert_action,
    make_task,
    robot_observation,
    sample_task_config,
    step,
    success,
    HAND_POINTS,
)
from corrbench.simworld.experts import BOX_KI_LAT, ExpertMemory
from corrbench.simworld.world import hand_points_world, rot2


def box_state(ee=(-0.3, 0.0, 0.02, 0.0), obj=(0.0, 0.0, 0.0)):
    return WorldState(ee=np.array(ee, dtype=float), gripper=0.05,
                      obj=np.array(obj, dtype=float),
                      shape=ObjectShape(kind="box", size_x=0.12, size_y=0.08,
                                        top=0.04))


# ---------------------------------------------------------------------------
# stepping


def test_no_contact_leaves_object_unchanged():
    s = box_state()
    s2 = step(s, Action.zero())
    assert np.array_equal(s2.obj, s.obj)


def test_centroid_push_translates_without_rotation():
    s = box_state(ee=(-0.061, 0.0, 0.02, 0.0))
    a = Action(delta_pos=np.array([0.02, 0.0, 0.0]), delta_yaw=0.0, gripper=0.05)
    for _ in range(5):
        s = step(s, a)
    assert s.obj[0] > 0.0
    assert s.obj[1] == pytest.approx(0.0, abs=1e-12)
    assert s.obj[2] == pytest.approx(0.0, abs=1e-12)


def off_center_push(offset_y, n=4):
    s = box_state(ee=(-0.061, offset_y, 0.02, 0.0))
    a = Action(delta_pos=np.array([0.02, 0.0, 0.0]), delta_yaw=0.0, gripper=0.05)
    for _ in range(n):
        s = step(s, a)
    return s


def test_off_center_push_rotates_with_lever_sign():
    # pushing +x with the finger on the -y side of the centroid line turns
    # the box counterclockwise; a fine-step rollout must agree on the sign
    coarse = off_center_push(-0.02)
    assert coarse.obj[2] > 0
    fine = box_state(ee=(-0.061, -0.02, 0.02, 0.0))
    a = Action(delta_pos=np.array([0.004, 0.0, 0.0]), delta_yaw=0.0, gripper=0.05)
    for _ in range(20):
        fine = step(fine, a)
    assert fine.obj[2] > 0
    assert off_center_push(+0.02).obj[2] < 0


def test_push_mirror_symmetry_negates_rotation():
    up = off_center_push(+0.015)
    down = off_center_push(-0.015)
    assert up.obj[2] == pytest.approx(-down.obj[2], abs=1e-12)
    assert up.obj[1] == pytest.approx(-down.obj[1], abs=1e-12)
    assert up.obj[0] == pytest.approx(down.obj[0], abs=1e-12)


def test_no_contact_conservation_under_rollout():
    rngs = stream(5, "conserve")
    s = box_state(ee=(-0.3, 0.2, 0.1, 0.0))
    for _ in range(50):
        a = Action(delta_pos=rngs.normal(0, 0.004, 3), delta_yaw=0.0, gripper=0.05)
        s2 = step(s, a)
        if s2.ee[2] > s.shape.top or np.linalg.norm(s2.ee[:2] - s2.obj[:2]) > 0.12:
            assert np.array_equal(s2.obj, s.obj)
        s = s2


def test_setpoint_tracking_converges_monotonically():
    s = box_state()
    target = np.array([-0.25, 0.03, 0.05])
    errs = []
    for _ in range(30):
        a = Action(delta_pos=target - s.ee[:3], delta_yaw=0.0, gripper=0.05)
        s = step(s, a)
        errs.append(float(np.linalg.norm(s.ee[:3] - target)))
    assert all(e2 <= e1 + 1e-15 for e1, e2 in zip(errs, errs[1:]))
    assert errs[-1] < 1e-6


def test_rate_limits_respected():
    s = box_state()
    a = Action(delta_pos=np.array([1.0, 1.0, 0.0]), delta_yaw=3.0, gripper=0.11)
    s2 = step(s, a)
    assert np.linalg.norm(s2.ee[:3] - s.ee[:3]) <= 0.02 + 1e-12
    assert abs(s2.ee[3] - s.ee[3]) <= 0.05 + 1e-12
    assert abs(s2.gripper - s.gripper) <= 0.01 + 1e-12


def test_object_clamped_to_table_and_flagged():
    s = box_state(ee=(0.43, 0.0, 0.02, 0.0), obj=(0.49, 0.0, 0.0))
    a = Action(delta_pos=np.array([0.02, 0.0, 0.0]), delta_yaw=0.0, gripper=0.05)
    ever_clamped = False
    for _ in range(10):
        s = step(s, a)
        ever_clamped = ever_clamped or s.clamped
        assert abs(s.obj[0]) <= 0.5 - s.shape.circumradius + 1e-12
    assert ever_clamped


def test_determinism_bit_identical_rollout():
    task = make_task("push_box")

    def run():
        rng = stream(99, "det")
        s = sample_task_config(task, "train", rng)
        mem = None
        for _ in range(60):
            a, mem = expert_action(task, s, mem)
            s = step(s, a, rng, task.disturbance)
        return s

    s1, s2 = run(), run()
    assert np.array_equal(s1.ee, s2.ee) and np.array_equal(s1.obj, s2.obj)
    assert s1.gripper == s2.gripper


# ---------------------------------------------------------------------------
# observations


def test_robot_observation_layout_and_rigidity():
    s = box_state(ee=(0.1, -0.2, 0.05, 0.7))
    obs = robot_observation(s, start_yaw=0.2)
    assert obs.shape == (13,)
    pts = obs[:9].reshape(3, 3)
    # rigid transform of the body-frame points
    r = rot2(0.7)
    expect = HAND_POINTS.copy()
    expect[:, :2] = expect[:, :2] @ r.T
    expect += np.array([0.1, -0.2, 0.05])
    assert np.allclose(pts, expect, atol=1e-12)
    d_body = np.linalg.norm(HAND_POINTS[0] - HAND_POINTS[1])
    assert np.linalg.norm(pts[0] - pts[1]) == pytest.approx(d_body, abs=1e-12)
    assert np.allclose(obs[9:12], [0.0, 0.0, 0.5])
    assert obs[12] == 0.05


# ---------------------------------------------------------------------------
# task configuration sampling


def test_train_draws_stay_in_region():
    task = make_task("reach_t")
    rng = stream(1, "cfg")
    for _ in range(10000):
        s = sample_task_config(task, "train", rng)
        assert abs(s.obj[0]) <= 0.20 and abs(s.obj[1]) <= 0.05


def test_reach_t_theta_always_zero():
    task = make_task("reach_t")
    rng = stream(2, "cfg")
    assert all(sample_task_config(task, "train", rng).obj[2] == 0.0
               for _ in range(500))


def test_test_split_theta_uniform_pm30():
    task = make_task("reach_tr")
    rng = stream(3, "cfg")
    thetas = np.array([sample_task_config(task, "test", rng).obj[2]
                       for _ in range(10000)])
    lim = np.deg2rad(30)
    assert thetas.min() >= -lim and thetas.max() <= lim
    assert abs(np.rad2deg(thetas.mean())) < 1.0


def test_train_x_tighter_than_test_x():
    task = make_task("reach_tr")
    rng = stream(4, "cfg")
    xs_train = np.array([sample_task_config(task, "train", rng).obj[0]
                         for _ in range(4000)])
    xs_test = np.array([sample_task_config(task, "test", rng).obj[0]
                        for _ in range(4000)])
    assert xs_train.std() < xs_test.std()


# ---------------------------------------------------------------------------
# success criteria


def test_reach_t_threshold_cases():
    task = make_task("reach_t")
    rng = stream(6, "succ")
    s0 = sample_task_config(task, "train", rng)
    from corrbench.simworld import reach_target
    target = reach_target(task, s0)
    near = WorldState(ee=np.array([target[0] + 0.011, target[1], target[2], 0.0]),
                      gripper=0.05, obj=s0.obj, shape=s0.shape)
    ok, score = success(task, near, s0)
    assert ok
    far = WorldState(ee=np.array([target[0] + 0.013, target[1], target[2], 0.0]),
                     gripper=0.05, obj=s0.obj, shape=s0.shape)
    ok, score = success(task, far, s0)
    assert not ok and score < 0


def test_reach_tr_rotation_gate():
    task = make_task("reach_tr")
    s0 = box_state(obj=(0.0, 0.0, 0.0))
    from corrbench.simworld import reach_target
    target = reach_target(task, s0)
    final = WorldState(ee=np.array([target[0] + 0.010, target[1], target[2],
                                    np.deg2rad(2.5)]),
                       gripper=0.05, obj=s0.obj, shape=s0.shape)
    ok, _ = success(task, final, s0)
    assert not ok
    final2 = WorldState(ee=np.array([target[0] + 0.010, target[1], target[2],
                                     np.deg2rad(1.5)]),
                        gripper=0.05, obj=s0.obj, shape=s0.shape)
    ok2, _ = success(task, final2, s0)
    assert ok2


def test_perfect_score_is_zero_and_scores_nonpositive():
    task = make_task("reach_tr")
    s0 = box_state()
    from corrbench.simworld import reach_target
    t = reach_target(task, s0)
    perfect = WorldState(ee=np.array([t[0], t[1], t[2], 0.0]), gripper=0.05,
                         obj=s0.obj, shape=s0.shape)
    ok, score = success(task, perfect, s0)
    assert ok and score == 0.0


# ---------------------------------------------------------------------------
# experts


def test_reach_expert_fixed_point():
    task = make_task("reach_t")
    s0 = box_state()
    from corrbench.simworld import reach_target
    t = reach_target(task, s0)
    at_target = WorldState(ee=np.array([t[0], t[1], t[2], 0.0]), gripper=0.05,
                           obj=s0.obj, shape=s0.shape)
    a, _ = expert_action(task, at_target, None)
    assert np.linalg.norm(a.delta_pos) < 1e-9


def test_box_integrator_hand_summation():
    # constant lateral error e over k steps accumulates to k*e, and the
    # integral term contributes gain * k * e to the commanded lever
    task = make_task("push_box")
    mem = ExpertMemory(mode="push", theta_ref=0.0,
                       line_origin=np.array([0.0, 0.0]), x_start=0.0)
    e = 0.004
    k = 7
    s = box_state(ee=(-0.06, 0.0, 0.02, 0.0), obj=(0.0, e, 0.0))
    for _ in range(k):
        _, mem = expert_action(task, s, mem)
    assert mem.integral == pytest.approx(k * e, abs=1e-12)
    assert BOX_KI_LAT * mem.integral == pytest.approx(BOX_KI_LAT * k * e, abs=1e-15)


@pytest.mark.parametrize("task_id", ["reach_t", "reach_tr", "push_box",
                                     "push_plate"])
def test_expert_success_rate_at_least_98(task_id):
    task = make_task(task_id)
    n_ok = 0
    for i in range(100):
        rng = stream(1234, "demo", task_id, i)
        s = sample_task_config(task, "train", rng)
        ref = s
        mem = None
        for _ in range(task.step_limit):
            a, mem = expert_action(task, s, mem)
            s = step(s, a, rng, task.disturbance)
        ok, _ = success(task, s, ref)
        n_ok += ok
    assert n_ok >= 98, f"{task_id}: expert succeeded only {n_ok}/100"
