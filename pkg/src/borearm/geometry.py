"""Rigid-transform primitives shared by the kinematics, scene and teleop code."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

ORTHONORMAL_TOL = 1e-9


class InvalidArgumentError(ValueError):
    """Raised when an operation receives a non-finite or out-of-domain input."""


def rot_x(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def rot_y(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def rot_z(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def euler_xyz_to_matrix(angles) -> np.ndarray:
    """Intrinsic X-then-Y-then-Z (roll, pitch, yaw) rotation matrix.

    This is the single place the Euler convention is pinned down; everything
    that converts (roll, pitch, yaw) triples goes through here. Equals
    rot_x(roll) @ rot_y(pitch) @ rot_z(yaw), expanded because this sits on
    the 400 Hz teleop path.
    """
    ca, sa = math.cos(angles[0]), math.sin(angles[0])
    cb, sb = math.cos(angles[1]), math.sin(angles[1])
    cc, sc = math.cos(angles[2]), math.sin(angles[2])
    return np.array([
        [cb * cc, -cb * sc, sb],
        [sa * sb * cc + ca * sc, -sa * sb * sc + ca * cc, -sa * cb],
        [-ca * sb * cc + sa * sc, ca * sb * sc + sa * cc, ca * cb],
    ])


def orthonormalize(R: np.ndarray) -> np.ndarray:
    """Project a near-rotation matrix back onto SO(3) by Gram-Schmidt on its columns.

    Scalar arithmetic throughout: this runs every teleop tick.
    """
    x0, x1, x2 = float(R[0, 0]), float(R[1, 0]), float(R[2, 0])
    inv = 1.0 / math.sqrt(x0 * x0 + x1 * x1 + x2 * x2)
    x0, x1, x2 = x0 * inv, x1 * inv, x2 * inv
    y0, y1, y2 = float(R[0, 1]), float(R[1, 1]), float(R[2, 1])
    dot = y0 * x0 + y1 * x1 + y2 * x2
    y0, y1, y2 = y0 - dot * x0, y1 - dot * x1, y2 - dot * x2
    inv = 1.0 / math.sqrt(y0 * y0 + y1 * y1 + y2 * y2)
    y0, y1, y2 = y0 * inv, y1 * inv, y2 * inv
    z0 = x1 * y2 - x2 * y1
    z1 = x2 * y0 - x0 * y2
    z2 = x0 * y1 - x1 * y0
    return np.array([[x0, y0, z0], [x1, y1, z1], [x2, y2, z2]])


def rotation_log(R: np.ndarray) -> np.ndarray:
    """Axis-angle vector (axis * angle) of a rotation matrix.

    Smooth near the identity; handles the pi-rotation branch explicitly.
    """
    trace = float(np.trace(R))
    cos_angle = max(-1.0, min(1.0, (trace - 1.0) / 2.0))
    angle = math.acos(cos_angle)
    if angle < 1e-12:
        return np.zeros(3)
    if angle > math.pi - 1e-6:
        # Near pi the off-diagonal formula degenerates; recover the axis from
        # the dominant diagonal of (R + I) / 2.
        B = (R + np.eye(3)) / 2.0
        axis = np.sqrt(np.maximum(np.diag(B), 0.0))
        k = int(np.argmax(axis))
        axis = B[:, k] / max(axis[k], 1e-12)
        axis = axis / np.linalg.norm(axis)
        return axis * angle
    axis = np.array([R[2, 1] - R[1, 2], R[0, 2] - R[2, 0], R[1, 0] - R[0, 1]])
    axis = axis / (2.0 * math.sin(angle))
    return axis * angle


@dataclass(frozen=True)
class Pose:
    """Rigid transform: a position vector in meters plus a 3x3 rotation matrix."""

    position: np.ndarray = field(default_factory=lambda: np.zeros(3))
    rotation: np.ndarray = field(default_factory=lambda: np.eye(3))

    def __post_init__(self):
        object.__setattr__(self, "position", np.asarray(self.position, dtype=float).reshape(3))
        object.__setattr__(self, "rotation", np.asarray(self.rotation, dtype=float).reshape(3, 3))
        if not (np.all(np.isfinite(self.position)) and np.all(np.isfinite(self.rotation))):
            raise InvalidArgumentError("pose contains non-finite values")

    @staticmethod
    def identity() -> "Pose":
        return Pose(np.zeros(3), np.eye(3))

    def compose(self, other: "Pose") -> "Pose":
        """self * other: apply `other` in this pose's frame."""
        return Pose(self.position + self.rotation @ other.position,
                    self.rotation @ other.rotation)

    def inverse(self) -> "Pose":
        Rt = self.rotation.T
        return Pose(-(Rt @ self.position), Rt)

    def transform_point(self, p) -> np.ndarray:
        return self.position + self.rotation @ np.asarray(p, dtype=float)

    def as_matrix(self) -> np.ndarray:
        T = np.eye(4)
        T[:3, :3] = self.rotation
        T[:3, 3] = self.position
        return T

    @staticmethod
    def from_matrix(T: np.ndarray) -> "Pose":
        T = np.asarray(T, dtype=float)
        return Pose(T[:3, 3].copy(), T[:3, :3].copy())

    def orthonormality_defect(self) -> float:
        return float(np.max(np.abs(self.rotation.T @ self.rotation - np.eye(3))))

    def require_orthonormal(self, tol: float = ORTHONORMAL_TOL) -> "Pose":
        defect = self.orthonormality_defect()
        if defect > tol or np.linalg.det(self.rotation) < 0.0:
            raise InvalidArgumentError(f"rotation is not orthonormal (defect {defect:g})")
        return self
