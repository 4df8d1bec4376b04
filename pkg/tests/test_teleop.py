
import numpy as np
import pytest

from borearm.geometry import Pose, euler_xyz_to_matrix, rot_x, rot_y, rot_z
from borearm.kinematics import forward_kinematics
from borearm.scene import Capsule, Scene
from borearm.teleop import (InputSample, TeleopConfig, TeleopSession,
                            adjust_gamma, integrate_pose, load_trace, needle_jog,
                            save_trace)

CFG = TeleopConfig()


def test_euler_convention_is_intrinsic_xyz(rng):
    for _ in range(50):
        a, b, c = rng.uniform(-3, 3, size=3)
        np.testing.assert_allclose(euler_xyz_to_matrix([a, b, c]),
                                   rot_x(a) @ rot_y(b) @ rot_z(c), atol=1e-14)


def test_zero_input_is_fixed_point():
    p = np.array([0.1, 0.2, 0.3])
    R = euler_xyz_to_matrix([0.3, -0.2, 0.5])
    p2, R2 = integrate_pose(p, R, 0.7, InputSample.idle(), CFG)
    np.testing.assert_array_equal(p2, p)
    np.testing.assert_allclose(R2, R, atol=1e-15)


def test_position_update_is_exact():
    p = np.array([0.05, -0.02, 0.4])
    v = np.array([0.3, -1.0, 0.7])
    gamma = 0.37
    p2, _ = integrate_pose(p, np.eye(3), gamma, InputSample(v=v), CFG)
    expected = p + gamma * (np.clip(v, -1, 1) * CFG.translation_gain)
    np.testing.assert_array_equal(p2, expected)


def test_gamma_halving_halves_increment_exactly(rng):
    p = np.zeros(3)
    for _ in range(20):
        v = rng.uniform(-1, 1, size=3)
        gamma = float(rng.uniform(0.1, 1.0))
        d_full, _ = integrate_pose(p, np.eye(3), gamma, InputSample(v=v), CFG)
        d_half, _ = integrate_pose(p, np.eye(3), gamma / 2.0, InputSample(v=v), CFG)
        np.testing.assert_array_equal(d_half, d_full / 2.0)


def test_input_axes_are_clamped():
    p = np.zeros(3)
    p_big, _ = integrate_pose(p, np.eye(3), 1.0, InputSample(v=[5.0, 0, 0]), CFG)
    p_one, _ = integrate_pose(p, np.eye(3), 1.0, InputSample(v=[1.0, 0, 0]), CFG)
    np.testing.assert_array_equal(p_big, p_one)


def test_rotation_update_left_multiplies():
    sample = InputSample(r=[1.0, 0.0, 0.0])
    _, R2 = integrate_pose(np.zeros(3), np.eye(3), 1.0, sample, CFG)
    np.testing.assert_allclose(R2, euler_xyz_to_matrix([CFG.rotation_gain, 0, 0]),
                               atol=1e-12)
    # Applied in the world frame: R' = dR @ R.
    R0 = rot_z(0.7)
    _, R3 = integrate_pose(np.zeros(3), R0, 1.0, sample, CFG)
    np.testing.assert_allclose(R3, euler_xyz_to_matrix([CFG.rotation_gain, 0, 0]) @ R0,
                               atol=1e-12)


def test_rotation_stays_orthonormal(rng):
    R = np.eye(3)
    p = np.zeros(3)
    for _ in range(10000):
        sample = InputSample(v=rng.uniform(-1, 1, 3), r=rng.uniform(-1, 1, 3))
        p, R = integrate_pose(p, R, 1.0, sample, CFG)
    defect = np.max(np.abs(R.T @ R - np.eye(3)))
    assert defect <= 1e-9


def test_adjust_gamma():
    assert adjust_gamma(1.0, +1) == 1.0
    assert adjust_gamma(0.5, +1) == pytest.approx(0.625, abs=1e-15)
    up_down = adjust_gamma(adjust_gamma(0.5, +1), -1)
    assert up_down == pytest.approx(0.5, abs=1e-12)
    assert adjust_gamma(CFG.gamma_min, -1) == CFG.gamma_min


def test_needle_jog(model):
    assert needle_jog(0.0, +1, model.limits) == pytest.approx(1e-4, abs=1e-18)
    top = model.limits.upper[6]
    assert needle_jog(top, +1, model.limits) == top
    assert needle_jog(needle_jog(0.01, +1, model.limits), -1, model.limits) == \
        pytest.approx(0.01, abs=1e-15)


def test_session_zero_input_constant_setpoints(model):
    session = TeleopSession(model)
    first = session.tick(InputSample.idle())
    for _ in range(20):
        result = session.tick(InputSample.idle())
        assert result.setpoints == first.setpoints


def test_session_constant_x_input_advances_monotonically(model):
    session = TeleopSession(model)
    start = forward_kinematics(model.dh, session.state.q).position
    xs = [start[0]]
    for _ in range(100):
        session.tick(InputSample(v=[0.2, 0.0, 0.0]))
        xs.append(forward_kinematics(model.dh, session.state.q).position[0])
    xs = np.array(xs)
    assert xs[-1] - xs[0] > 0.8 * 100 * 0.2 * CFG.translation_gain
    assert np.all(np.diff(xs) > -1e-5)   # monotone within IK tolerance


def test_session_needle_jog_changes_only_q7(model):
    session = TeleopSession(model)
    q_before = session.state.q.copy()
    session.tick(InputSample(needle_jog=+1))
    assert session.state.needle_extension == pytest.approx(q_before[6] + 1e-4)
    assert session.state.q[6] == pytest.approx(q_before[6] + 1e-4)


def test_session_rubber_band_on_unreachable_target(model):
    session = TeleopSession(model)
    session.state.target_position = session.state.target_position + np.array([1.0, 0, 0])
    result = session.tick(InputSample.idle())
    assert "rubber_band" in result.events
    achieved = forward_kinematics(model.dh, session.state.q).position
    np.testing.assert_allclose(session.state.target_position, achieved, atol=1e-12)


def test_session_collision_guard_stops_motion(model):
    # A blocking capsule dead ahead on the +x path of the tool.
    session_free = TeleopSession(model)
    tip0 = forward_kinematics(model.dh, session_free.state.q)
    blocker = Capsule(tip0.position + np.array([0.02, 0.0, 0.0]),
                      tip0.position + np.array([0.02, 0.0, 0.0]), 0.015, "wall")
    scene = Scene(bore=None, table=None, patient=(blocker,),
                  mount=Pose.identity(), name="guard")
    config = TeleopConfig(collision_guard=True)
    session = TeleopSession(model, config, scene)
    guard_events = 0
    for _ in range(200):
        result = session.tick(InputSample(v=[1.0, 0.0, 0.0]))
        guard_events += "collision_guard" in result.events
    assert guard_events > 0
    tip = forward_kinematics(model.dh, session.state.q).position
    # Stopped before reaching through the capsule.
    assert tip[0] < tip0.position[0] + 0.02


def test_session_estop_event(model):
    session = TeleopSession(model)
    result = session.tick(InputSample(estop=True))
    assert "estop" in result.events


def test_trace_round_trip(tmp_path, rng):
    entries = []
    for t in range(50):
        entries.append((t, InputSample(v=rng.uniform(-1, 1, 3),
                                       r=rng.uniform(-1, 1, 3),
                                       gamma_up=bool(t % 7 == 0),
                                       needle_jog=int(t % 11 == 0),
                                       estop=False)))
    path = save_trace(tmp_path / "trace.jsonl", entries)
    loaded = load_trace(path)
    assert len(loaded) == len(entries)
    for (t1, s1), (t2, s2) in zip(entries, loaded):
        assert t1 == t2
        np.testing.assert_array_equal(s1.v, s2.v)
        np.testing.assert_array_equal(s1.r, s2.r)
        assert s1.gamma_up == s2.gamma_up
        assert s1.needle_jog == s2.needle_jog


def test_session_replay_determinism(model, tmp_path, rng):
    entries = [(t, InputSample(v=rng.uniform(-1, 1, 3), r=rng.uniform(-1, 1, 3)))
               for t in range(200)]
    path = save_trace(tmp_path / "trace.jsonl", entries)
    loaded = load_trace(path)

    def run():
        session = TeleopSession(model)
        return [session.tick(sample).setpoints for _, sample in loaded]

    assert run() == run()
