"""Measurement harnesses mirroring the physical benchtop protocols.

These reproduce the *procedures* (pose-sequence repeatability, paper-target
scoring from logged tip poses), not the physical numbers: the simulated
transmission is deterministic, so simulated repeatability is exactly zero,
and scoring a logged tip pose equals the analytic tip-position error. Both
properties are asserted in the test suite; on hardware the same harnesses
would report the real spread.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .geometry import InvalidArgumentError, Pose
from .kinematics import forward_kinematics
from .model import RobotModel
from .transmission import (actuators_to_joints, counts_to_actuators,
                           joints_to_actuators, quantize_actuator)


def joint_space_grid(model: RobotModel, levels: int = 2) -> np.ndarray:
    """Equally spaced joint-space sequence over the first six joints.

    levels=2 gives the 64-point sequence (2^6 corners at the 25% / 75%
    quantiles of each joint range); the insertion joint stays retracted.
    """
    lower = model.limits.lower
    upper = model.limits.upper
    fractions = (np.arange(levels) + 1.0) / (levels + 1.0)
    axes = [lower[j] + fractions * (upper[j] - lower[j]) for j in range(6)]
    mesh = np.meshgrid(*axes, indexing="ij")
    points = np.stack([m.ravel() for m in mesh], axis=1)
    return np.hstack([points, np.zeros((points.shape[0], 1))])


def command_roundtrip(model: RobotModel, q) -> np.ndarray:
    """Joint vector actually reached after commanding q through the drivetrain.

    joints -> actuators -> encoder counts -> actuators -> joints; the only
    information loss is count quantization.
    """
    m = joints_to_actuators(model.mixing, q)
    counts, _ = quantize_actuator(m, model.encoder)
    return actuators_to_joints(model.mixing, counts_to_actuators(counts, model.encoder))


@dataclass(frozen=True)
class RepeatabilityReport:
    points: np.ndarray            # (K, 7) commanded sequence
    positions: np.ndarray         # (R, K, 3) measured tip positions
    rotations: np.ndarray         # (R, K, 3, 3)
    position_std_m: np.ndarray    # (K,) L2 deviation from the per-point mean
    orientation_std_rad: np.ndarray

    @property
    def worst_position_std_m(self) -> float:
        return float(self.position_std_m.max())

    @property
    def worst_orientation_std_rad(self) -> float:
        return float(self.orientation_std_rad.max())


def repeatability_run(model: RobotModel, points=None, repeats: int = 5) -> RepeatabilityReport:
    """Visit a pose sequence repeatedly and measure the per-point tip spread."""
    if points is None:
        points = joint_space_grid(model)
    points = np.asarray(points, dtype=float)
    if repeats < 2:
        raise InvalidArgumentError("repeatability needs at least 2 visits")
    K = points.shape[0]
    positions = np.zeros((repeats, K, 3))
    rotations = np.zeros((repeats, K, 3, 3))
    for r in range(repeats):
        for k in range(K):
            reached = command_roundtrip(model, points[k])
            tip = forward_kinematics(model.dh, reached)
            positions[r, k] = tip.position
            rotations[r, k] = tip.rotation
    # Deviations are computed relative to the first visit so bit-identical
    # measurements yield exactly zero spread (no mean-rounding noise).
    deltas = positions - positions[0]
    mean_delta = deltas.mean(axis=0)
    pos_std = np.sqrt(np.mean(np.sum((deltas - mean_delta) ** 2, axis=2), axis=0))
    # Orientation spread: RMS rotation angle to the first visit, through the
    # sin-based chordal formula (exact zero for equal matrices, stable near 0).
    ori_std = np.zeros(K)
    for k in range(K):
        ref = rotations[0, k]
        angles = []
        for r in range(repeats):
            chord = float(np.linalg.norm(rotations[r, k] - ref))
            angles.append(2.0 * math.asin(min(1.0, chord / (2.0 * math.sqrt(2.0)))))
        ori_std[k] = float(np.sqrt(np.mean(np.square(angles))))
    return RepeatabilityReport(points, positions, rotations, pos_std, ori_std)


def target_board(rows: int = 4, cols: int = 4, spacing: float = 0.02,
                 center=(0.0, 0.0, 0.0)) -> np.ndarray:
    """Bull's-eye grid in the x-y plane around a center point."""
    center = np.asarray(center, dtype=float).reshape(3)
    xs = (np.arange(cols) - (cols - 1) / 2.0) * spacing
    ys = (np.arange(rows) - (rows - 1) / 2.0) * spacing
    grid = [center + np.array([x, y, 0.0]) for y in ys for x in xs]
    return np.vstack(grid)


def score_targets(tip_positions, targets) -> dict:
    """Puncture distance of each logged tip position from its target center."""
    tip_positions = np.asarray(tip_positions, dtype=float)
    targets = np.asarray(targets, dtype=float)
    if tip_positions.shape != targets.shape:
        raise InvalidArgumentError("one logged tip pose per target is required")
    errors = np.linalg.norm(tip_positions - targets, axis=1)
    return {"errors_m": errors,
            "mean_m": float(errors.mean()),
            "std_m": float(errors.std()),
            "max_m": float(errors.max())}


def save_pose_log(path: str | Path, poses) -> Path:
    """Tip-pose log: one JSON object per line (index, position, rotation)."""
    lines = []
    for i, pose in enumerate(poses):
        lines.append(json.dumps({
            "index": i,
            "position": [float(x) for x in pose.position],
            "rotation": [[float(x) for x in row] for row in pose.rotation],
        }, separators=(",", ":")))
    path = Path(path)
    path.write_text("\n".join(lines) + "\n")
    return path


def load_pose_log(path: str | Path) -> list[Pose]:
    poses = []
    for raw in Path(path).read_text().splitlines():
        if not raw.strip():
            continue
        doc = json.loads(raw)
        poses.append(Pose(doc["position"], doc["rotation"]))
    return poses
