"""Acceptance suite: one test per criterion, each printing a PASS line.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
lines and timings. Every tolerance is asserted exactly as stated; each
criterion also asserts its wall-clock budget.
"""

import time
from contextlib import contextmanager

import numpy as np
import pytest

from borearm.controller import ControllerSim
from borearm.harness import (joint_space_grid, repeatability_run, score_targets,
                             target_board)
from borearm.kinematics import (IkParams, batch_fk_frames, forward_kinematics,
                                ik_dls, jacobian)
from borearm.scene import Scene, patient_vertices
from borearm.statics import (check_load_rating, endeffector_stiffness,
                             needle_torque_bounds)
from borearm.teleop import InputSample, TeleopConfig, TeleopSession, integrate_pose
from borearm.transmission import (actuators_to_joints, encoder_resolution_matches,
                                  joints_to_actuators)
from borearm.workspace import approach_cones, bin_reachability, sample_workspace

from oracles import brute_force_heatmap_counts, finite_difference_jacobian, oracle_fk


@contextmanager
def criterion(name: str, budget_s: float):
    start = time.monotonic()
    yield
    elapsed = time.monotonic() - start
    assert elapsed < budget_s, f"{name}: {elapsed:.1f}s exceeds {budget_s:.0f}s budget"
    print(f"PASS  {name}  ({elapsed:.2f}s / {budget_s:.0f}s budget)")


def test_eq1_torque_bounds():
    with criterion("torque bounds (1.28, 0.64, 0) N*m at 8 N, zero tolerance", 1.0):
        assert needle_torque_bounds(8.0) == (1.28, 0.64, 0.0)


def test_load_rating_verdict():
    with criterion("load rating passes with 0.011 N*m gravity margin", 1.0):
        report = check_load_rating(needle_torque_bounds(8.0), 8.0,
                                   gravity_margin_nm=0.011)
        assert report.all_pass
        limits = [c.limit for c in report.checks]
        assert limits == [2.49, 1.25, 1.25, 177.8]


def test_encoder_resolution(model):
    with criterion("encoder resolution 360/(2000*479) matches 3.7e-4 deg/count", 1.0):
        assert model.encoder.resolution_deg_per_count == 360.0 / (2000 * 479)
        assert encoder_resolution_matches(model.encoder, quoted=3.7e-4, sig_figs=2)


def test_stiffness_budget(model):
    # Consistency check of the shipped calibrated cable run, not an
    # independent reproduction (the run geometry is a config value).
    with criterion("tip stiffness >= 1.55 N/mm and <= 0.645 mm/N (calibrated)", 1.0):
        k = endeffector_stiffness(model.cable_drive)
        assert k >= 1.55
        assert 1.0 / k <= 0.645


def test_mixing_matrix(model, rng):
    with criterion("mixing matrix column m4 exact; round trip <= 1e-12 x100", 1.0):
        m = np.zeros(7)
        m[3] = 1.0
        q = actuators_to_joints(model.mixing, m)
        assert list(q) == [0.0, 0.0, 0.0, 0.45, -0.35, 0.94, -5.26e-3]
        for _ in range(100):
            q = rng.uniform(-1.0, 1.0, size=7)
            back = actuators_to_joints(model.mixing,
                                       joints_to_actuators(model.mixing, q))
            assert np.max(np.abs(back - q)) <= 1e-12


def test_fk_jacobian_oracles(model, rng):
    with criterion("FK matches homogeneous oracle (1000 @ 1e-9); "
                   "Jacobian matches finite differences (100 @ 1e-5)", 10.0):
        Q = rng.uniform(model.limits.lower, model.limits.upper, size=(1000, 7))
        origins, rotations = batch_fk_frames(model.dh, Q)
        for i, q in enumerate(Q):
            T = oracle_fk(model.dh, q, frame=8)
            assert np.max(np.abs(origins[i, 8] - T[:3, 3])) <= 1e-9
            assert np.max(np.abs(rotations[i, 8] - T[:3, :3])) <= 1e-9
        Qj = rng.uniform(model.limits.lower, model.limits.upper, size=(100, 7))
        Qj = 0.99 * Qj + 0.01 * model.limits.midpoint()
        for q in Qj:
            J = jacobian(model.dh, q)
            J_fd = finite_difference_jacobian(
                lambda qq: forward_kinematics(model.dh, qq).position,
                lambda qq: forward_kinematics(model.dh, qq).rotation, q)
            for col in range(7):
                scale = max(np.linalg.norm(J_fd[:, col]), 1e-9)
                assert np.linalg.norm(J[:, col] - J_fd[:, col]) / scale <= 1e-5


def test_ik_recovery(model, rng):
    # Trial protocol mirrors the feasible-target construction: a random
    # in-limit configuration, a target built from an in-limit perturbation of
    # it (each joint +-0.05), solved with shipped defaults.
    with criterion("IK recovery >= 99% of 500 feasible targets; "
                   "nullspace variant preserves task residual", 60.0):
        params = IkParams()
        converged = 0
        for _ in range(500):
            q0 = rng.uniform(model.limits.lower, model.limits.upper)
            q_star = model.limits.clamp(q0 + rng.uniform(-0.05, 0.05, size=7))
            target = forward_kinematics(model.dh, q_star)
            result = ik_dls(model.dh, q0, target, params, limits=model.limits)
            if (result.converged and result.position_residual < 1e-4
                    and result.orientation_residual < 1e-3):
                converged += 1
        assert converged >= 495, f"only {converged}/500 converged"

        mid = model.limits.midpoint()
        ns_params = IkParams(nullspace_gain=0.2)
        checked = 0
        for _ in range(40):
            q0 = rng.uniform(model.limits.lower, model.limits.upper)
            q_star = model.limits.clamp(q0 + rng.uniform(-0.05, 0.05, size=7))
            target = forward_kinematics(model.dh, q_star)
            result = ik_dls(model.dh, q0, target, ns_params, limits=model.limits,
                            nullspace_objective=lambda q: mid - q)
            if result.converged:
                assert result.position_residual <= ns_params.position_tol
                assert result.orientation_residual <= ns_params.orientation_tol

                checked += 1
        assert checked >= 35


def test_workspace_study(model, scene, rng):
    # Desk-scale property substitute for the full N=1.77e6 mesh study.
    with criterion("workspace: fraction stable +-2pp over 5 seeds @ 1e5; "
                   "counts match brute force; patient removal monotone; "
                   "lung targets reachable", 300.0):
        fractions = []
        first_seed_samples = None
        for seed in range(5):
            samples = sample_workspace(scene, model, n=100000, seed=seed, workers=4)
            fractions.append(samples.free_fraction)
            if seed == 0:
                first_seed_samples = samples
        fractions = np.array(fractions)
        assert np.max(np.abs(fractions - fractions.mean())) <= 0.02

        oracle_samples = sample_workspace(scene, model, n=1000, seed=101)
        targets = rng.uniform([-0.2, -0.2, -0.1], [0.2, 0.2, 0.4], size=(100, 3))
        heatmap = bin_reachability(oracle_samples, targets, radius=5e-3)
        brute = brute_force_heatmap_counts(oracle_samples.tip_position,
                                           oracle_samples.collision_free,
                                           targets, 5e-3)
        assert np.array_equal(heatmap.counts, brute)

        bare = Scene(bore=scene.bore, table=scene.table, patient=(),
                     mount=scene.mount, name="no-patient")
        bare_samples = sample_workspace(bare, model, n=100000, seed=0, workers=4)
        assert np.all(bare_samples.collision_free >= first_seed_samples.collision_free)
        verts = patient_vertices(scene, spacing=0.02)
        full_map = bin_reachability(first_seed_samples, verts)
        bare_map = bin_reachability(bare_samples, verts)
        assert np.all(bare_map.counts >= full_map.counts)

        lung = ((np.abs(verts[:, 0]) < 0.14) & (verts[:, 2] > 0.0)
                & (verts[:, 2] < 0.30) & (verts[:, 1] > -0.08))
        lung_counts = full_map.counts[lung]
        assert lung_counts.sum() > 0, "no lung-region target reachable"
        best = verts[lung][int(np.argmax(lung_counts))]
        cone = approach_cones(first_seed_samples, best)
        assert not cone.empty
        assert cone.half_angle_rad is not None


def test_controller_criterion():
    with criterion("controller: step settles +-2 counts <= 20% overshoot; "
                   "watchdog gap zeroes; e-stop latches; deterministic replay",
                   30.0):
        sim = ControllerSim()
        sim.apply({"cmd": "enable"})
        sim.apply({"cmd": "set_setpoints", "counts": [1000] * 8})
        positions = []
        for t in range(100):
            if t % 50 == 0:
                sim.apply({"cmd": "set_setpoints", "counts": [1000] * 8})
            sim.tick()
            positions.append([axis.position for axis in sim.axes])
        positions = np.array(positions)
        assert positions.max() <= 1000 * 1.20
        assert np.all(np.abs(positions[50:] - 1000.0) <= 2.0)

        watchdog_ticks = sim.config.watchdog_ticks   # 100 ms at 1 kHz
        assert watchdog_ticks == 100
        for _ in range(watchdog_ticks + 1):
            sim.tick()
        assert np.array_equal(sim.tick(), np.zeros(8))
        assert sim.safety.watchdog_expired

        sim.apply({"cmd": "enable"})
        sim.apply({"cmd": "estop"})
        sim.apply({"cmd": "set_setpoints", "counts": [500] * 8})
        assert np.array_equal(sim.tick(), np.zeros(8))
        sim.apply({"cmd": "enable"})
        sim.apply({"cmd": "set_setpoints", "counts": [500] * 8})
        assert np.any(sim.tick() != 0.0)

        trace = [(0, {"cmd": "enable"}),
                 (0, {"cmd": "set_setpoints", "counts": [1000] * 8}),
                 (60, {"cmd": "set_setpoints", "counts": [-800] * 8}),
                 (150, {"cmd": "estop"})]
        runs = [ControllerSim().replay(trace, 400) for _ in range(2)]
        assert runs[0] == runs[1]
        assert sim.tick_index * sim.config.timestep_s < 30.0


def test_teleop_criterion(model, rng):
    with criterion("teleop: fixed point; dp = gamma*v exact; gamma halving; "
                   "1e4-tick replay identical; orthonormality 1e-9 over 1e6 ticks",
                   60.0):
        config = TeleopConfig()
        p0 = np.array([0.01, 0.02, 0.03])
        R0 = np.eye(3)
        p1, R1 = integrate_pose(p0, R0, 0.8, InputSample.idle(), config)
        assert np.array_equal(p1, p0) and np.array_equal(R1, R0)

        v = np.array([0.3, -0.7, 0.2])
        gamma = 0.61
        increment = gamma * (v * config.translation_gain)
        p2, _ = integrate_pose(p0, R0, gamma, InputSample(v=v), config)
        assert np.array_equal(p2, p0 + increment)   # dp = gamma * v, bit-exact
        # Halving gamma halves the applied increment bit for bit.
        half_increment = (gamma / 2.0) * (v * config.translation_gain)
        assert np.array_equal(half_increment, increment / 2.0)
        p_half, _ = integrate_pose(p0, R0, gamma / 2.0, InputSample(v=v), config)
        assert np.array_equal(p_half, p0 + increment / 2.0)

        trace = [InputSample(v=rng.uniform(-1, 1, 3), r=rng.uniform(-1, 1, 3),
                             needle_jog=int(t % 500 == 0))
                 for t in range(10000)]

        def run_trace():
            session = TeleopSession(model, config)
            return [session.tick(sample).setpoints for sample in trace]

        assert run_trace() == run_trace()

        class Axes:   # bare v/r holder; skips dataclass validation in the hot loop
            __slots__ = ("v", "r")

            def __init__(self, v, r):
                self.v = v
                self.r = r

        chunk = 100000
        p = np.zeros(3)
        R = np.eye(3)
        identity = np.eye(3)
        worst = 0.0
        sample = Axes(np.zeros(3), np.zeros(3))
        for _ in range(10):
            V = rng.uniform(-1, 1, (chunk, 3))
            W = rng.uniform(-1, 1, (chunk, 3))
            for i in range(chunk):
                sample.v = V[i]
                sample.r = W[i]
                p, R = integrate_pose(p, R, 1.0, sample, config)
                defect = np.max(np.abs(R.T @ R - identity))
                if defect > worst:
                    worst = defect
        assert worst <= 1e-9, f"orthonormality defect {worst:.2e}"


def test_physical_numbers_not_reproduced(model, rng):
    # The OptiTrack repeatability (2.43 mm / 2.95 deg), the teleoperated paper
    # target accuracy (0.73 mm) and the phantom biopsy are physical
    # experiments; here the harnesses run against the deterministic twin:
    # repeatability must be exactly zero and scoring must equal the analytic
    # tip error.
    with criterion("measurement harnesses: simulated repeatability exactly 0; "
                   "target scoring equals analytic tip error", 60.0):
        report = repeatability_run(model, points=joint_space_grid(model),
                                   repeats=5)
        assert report.worst_position_std_m == 0.0
        assert report.worst_orientation_std_rad == 0.0

        board = target_board(rows=4, cols=4, spacing=0.02, center=(0.0, -0.05, 0.2))
        logged = []
        for k in range(16):
            q = rng.uniform(model.limits.lower, model.limits.upper)
            logged.append(forward_kinematics(model.dh, q).position)
        logged = np.array(logged)
        scored = score_targets(logged, board)
        analytic = np.linalg.norm(logged - board, axis=1)
        assert np.array_equal(scored["errors_m"], analytic)
        assert scored["mean_m"] == analytic.mean()
