"""Modified-DH forward kinematics, geometric Jacobian, and damped-least-squares IK.

Frame convention: frame n+1 is placed from frame n by

    c[n+1] = c[n] + a * x[n] + d * z[n+1]
    R[n+1] = R[n] @ rot_x(alpha) @ rot_z(theta)

with the joint variable entering d for prismatic rows and theta for revolute
rows. The tool frame (row 8 of the arm's table) is a fixed row with no joint
variable. Joint axes are the z-axes of their own frames, for both joint kinds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import InvalidArgumentError, Pose, rotation_log

PRISMATIC = "prismatic"
REVOLUTE = "revolute"
FIXED = "fixed"

N_JOINTS = 7
TOOL_FRAME = 8


class JointLimitError(ValueError):
    """A joint coordinate violated its configured limits."""

    def __init__(self, joint_index: int, value: float, lower: float, upper: float):
        self.joint_index = joint_index
        self.value = value
        self.lower = lower
        self.upper = upper
        super().__init__(
            f"joint {joint_index + 1} value {value:g} outside [{lower:g}, {upper:g}]")


class NumericalFailureError(RuntimeError):
    """IK produced a non-finite intermediate; indicates a bug or absurd parameters."""


@dataclass(frozen=True)
class DHRow:
    """One modified-DH row: link constants plus the kind of joint that drives it."""

    joint_type: str
    a: float = 0.0
    alpha: float = 0.0
    d_offset: float = 0.0
    theta_offset: float = 0.0

    def __post_init__(self):
        if self.joint_type not in (PRISMATIC, REVOLUTE, FIXED):
            raise InvalidArgumentError(f"unknown joint type {self.joint_type!r}")
        for name in ("a", "alpha", "d_offset", "theta_offset"):
            if not math.isfinite(getattr(self, name)):
                raise InvalidArgumentError(f"DH constant {name} is not finite")


@dataclass(frozen=True)
class DHTable:
    """Ordered modified-DH rows; rows 1..7 actuated, row 8 the fixed tool frame."""

    rows: tuple

    def __post_init__(self):
        object.__setattr__(self, "rows", tuple(self.rows))
        n_actuated = sum(1 for r in self.rows if r.joint_type != FIXED)
        if n_actuated != N_JOINTS:
            raise InvalidArgumentError(
                f"expected {N_JOINTS} actuated rows, got {n_actuated}")

    def __len__(self) -> int:
        return len(self.rows)


@dataclass(frozen=True)
class JointLimits:
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "lower", np.asarray(self.lower, dtype=float).reshape(N_JOINTS))
        object.__setattr__(self, "upper", np.asarray(self.upper, dtype=float).reshape(N_JOINTS))
        if np.any(self.lower > self.upper):
            raise InvalidArgumentError("joint limit lower bound exceeds upper bound")

    def check(self, q) -> np.ndarray:
        q = np.asarray(q, dtype=float).reshape(N_JOINTS)
        if not np.all(np.isfinite(q)):
            raise InvalidArgumentError("joint vector contains non-finite values")
        for i in range(N_JOINTS):
            if q[i] < self.lower[i] or q[i] > self.upper[i]:
                raise JointLimitError(i, q[i], self.lower[i], self.upper[i])
        return q

    def clamp(self, q) -> np.ndarray:
        return np.clip(np.asarray(q, dtype=float).reshape(N_JOINTS), self.lower, self.upper)

    def contains(self, q) -> bool:
        q = np.asarray(q, dtype=float).reshape(N_JOINTS)
        return bool(np.all(q >= self.lower) and np.all(q <= self.upper))

    def midpoint(self) -> np.ndarray:
        return (self.lower + self.upper) / 2.0

    def sample(self, rng: np.random.Generator, n: int = 1) -> np.ndarray:
        return rng.uniform(self.lower, self.upper, size=(n, N_JOINTS))


@dataclass(frozen=True)
class IkParams:
    damping: float = 0.1
    max_iterations: int = 200
    position_tol: float = 1e-4
    orientation_tol: float = 1e-3
    step_clamp: float = 0.1
    nullspace_gain: float = 0.0

    def __post_init__(self):
        if self.damping <= 0.0:
            raise InvalidArgumentError("damping must be positive")
        if self.position_tol <= 0.0 or self.orientation_tol <= 0.0:
            raise InvalidArgumentError("tolerances must be positive")
        if self.step_clamp <= 0.0:
            raise InvalidArgumentError("step_clamp must be positive")
        if self.nullspace_gain < 0.0:
            raise InvalidArgumentError("nullspace_gain must be >= 0")


@dataclass(frozen=True)
class IkResult:
    q: np.ndarray
    position_residual: float
    orientation_residual: float
    iterations: int
    converged: bool


def dh_transform(row: DHRow, q: float = 0.0) -> Pose:
    """Relative transform from a frame to the next for one DH row.

    The joint variable q enters d (prismatic) or theta (revolute); fixed rows
    ignore it.
    """
    if not math.isfinite(q):
        raise InvalidArgumentError("joint coordinate is not finite")
    d = row.d_offset
    theta = row.theta_offset
    if row.joint_type == PRISMATIC:
        d = d + q
    elif row.joint_type == REVOLUTE:
        theta = theta + q
    ca, sa = math.cos(row.alpha), math.sin(row.alpha)
    ct, st = math.cos(theta), math.sin(theta)
    # R = rot_x(alpha) @ rot_z(theta); translation a*x_parent + d*z_child,
    # where z_child = rot_x(alpha) @ (0,0,1) in the parent frame.
    R = np.array([
        [ct, -st, 0.0],
        [ca * st, ca * ct, -sa],
        [sa * st, sa * ct, ca],
    ])
    p = np.array([row.a, -sa * d, ca * d])
    return Pose(p, R)


def _joint_values(dh: DHTable, q: np.ndarray):
    """Pair each row with its joint value (0.0 for fixed rows)."""
    q = np.asarray(q, dtype=float).reshape(N_JOINTS)
    values = []
    j = 0
    for row in dh.rows:
        if row.joint_type == FIXED:
            values.append((row, 0.0))
        else:
            values.append((row, q[j]))
            j += 1
    return values


def fk_frames(dh: DHTable, q, limits: JointLimits | None = None) -> list[Pose]:
    """Poses of frames 0..len(dh); index i is frame i (frame 0 = base identity)."""
    q = np.asarray(q, dtype=float).reshape(N_JOINTS)
    if limits is not None:
        limits.check(q)
    elif not np.all(np.isfinite(q)):
        raise InvalidArgumentError("joint vector contains non-finite values")
    frames = [Pose.identity()]
    for row, value in _joint_values(dh, q):
        frames.append(frames[-1].compose(dh_transform(row, value)))
    return frames


def forward_kinematics(dh: DHTable, q, frame: int = TOOL_FRAME,
                       limits: JointLimits | None = None) -> Pose:
    """Pose of the requested frame (1..8); frame 8 is the needle-tip tool frame."""
    if not 1 <= frame <= len(dh):
        raise InvalidArgumentError(f"frame must be in 1..{len(dh)}")
    return fk_frames(dh, q, limits)[frame]


def jacobian(dh: DHTable, q, frames: list[Pose] | None = None) -> np.ndarray:
    """Geometric Jacobian of the tool frame: rows 0-2 linear, rows 3-5 angular.

    Prismatic columns are (z_i, 0); revolute columns (z_i x (tip - c_i), z_i),
    where z_i and c_i are the joint frame's z-axis and origin. Pass frames
    from fk_frames to avoid recomputing the chain.
    """
    if frames is None:
        frames = fk_frames(dh, q)
    tip = frames[-1].position
    J = np.zeros((6, N_JOINTS))
    j = 0
    for i, row in enumerate(dh.rows):
        if row.joint_type == FIXED:
            continue
        frame = frames[i + 1]
        z = frame.rotation[:, 2]
        if row.joint_type == PRISMATIC:
            J[:3, j] = z
        else:
            J[:3, j] = np.cross(z, tip - frame.position)
            J[3:, j] = z
        j += 1
    return J


def pose_error(target: Pose, current: Pose) -> np.ndarray:
    """6-vector task error: translation difference and axis-angle of R_t R_c^T."""
    e = np.empty(6)
    e[:3] = target.position - current.position
    e[3:] = rotation_log(target.rotation @ current.rotation.T)
    return e


def ik_dls(dh: DHTable, q0, target: Pose, params: IkParams | None = None,
           limits: JointLimits | None = None,
           nullspace_objective=None) -> IkResult:
    """Damped-least-squares IK toward a tool-frame target pose.

    Iterates dq = J^T (J J^T + lambda^2 I)^-1 e + k_null (I - J+ J) g, with the
    infinity norm of dq clamped to step_clamp and q clamped to the joint limits
    after every step. `nullspace_objective` maps q to a joint-space gradient g;
    it only contributes when params.nullspace_gain > 0.
    """
    params = params or IkParams()
    q = np.asarray(q0, dtype=float).reshape(N_JOINTS).copy()
    if limits is not None:
        limits.check(q)

    lam2 = params.damping ** 2
    best_pos = math.inf
    best_rot = math.inf
    for iteration in range(params.max_iterations + 1):
        frames = fk_frames(dh, q)
        e = pose_error(target, frames[-1])
        pos_err = float(np.linalg.norm(e[:3]))
        rot_err = float(np.linalg.norm(e[3:]))
        best_pos, best_rot = pos_err, rot_err
        if pos_err <= params.position_tol and rot_err <= params.orientation_tol:
            return IkResult(q, pos_err, rot_err, iteration, True)
        if iteration == params.max_iterations:
            break

        J = jacobian(dh, q, frames=frames)
        dq = _dls_step(J, e, q, lam2, params, limits, nullspace_objective)
        if not np.all(np.isfinite(dq)):
            raise NumericalFailureError("IK step is not finite")
        q = q + dq
        if limits is not None:
            q = limits.clamp(q)

    return IkResult(q, best_pos, best_rot, params.max_iterations, False)


def _dls_step(J, e, q, lam2, params: IkParams, limits: JointLimits | None,
              nullspace_objective) -> np.ndarray:
    """One damped-least-squares step with saturated-joint handling.

    A joint sitting at its limit with the step pushing further out cannot
    contribute; its column is removed and the step re-solved within the
    feasible subspace, otherwise the clamp would silently eat part of the
    correction every iteration and stall short of tolerance.
    """
    masked = np.zeros(N_JOINTS, dtype=bool)
    eye6 = np.eye(6)
    for _ in range(N_JOINTS):
        J_eff = J.copy()
        J_eff[:, masked] = 0.0
        dq = J_eff.T @ np.linalg.solve(J_eff @ J_eff.T + lam2 * eye6, e)
        if params.nullspace_gain > 0.0 and nullspace_objective is not None:
            g = np.asarray(nullspace_objective(q), dtype=float).reshape(N_JOINTS)
            N = np.eye(N_JOINTS) - np.linalg.pinv(J_eff) @ J_eff
            dq = dq + params.nullspace_gain * (N @ g)
            dq[masked] = 0.0
        step = float(np.max(np.abs(dq)))
        if step > params.step_clamp:
            dq = dq * (params.step_clamp / step)
        if limits is None:
            return dq
        saturated = (((q <= limits.lower + 1e-12) & (dq < 0.0))
                     | ((q >= limits.upper - 1e-12) & (dq > 0.0)))
        new = saturated & ~masked
        if not np.any(new):
            return dq
        masked |= new
    return dq


def batch_fk_frames(dh: DHTable, Q: np.ndarray):
    """Vectorized FK over a batch of joint vectors.

    Q is (B, 7); returns (origins, rotations) with shapes (B, n+1, 3) and
    (B, n+1, 3, 3), frame 0 included. Matches fk_frames row for row; the Monte
    Carlo sampler leans on this for throughput.
    """
    Q = np.asarray(Q, dtype=float)
    if Q.ndim == 1:
        Q = Q[None, :]
    B = Q.shape[0]
    n = len(dh)
    origins = np.zeros((B, n + 1, 3))
    rotations = np.zeros((B, n + 1, 3, 3))
    rotations[:, 0] = np.eye(3)
    j = 0
    for i, row in enumerate(dh.rows):
        if row.joint_type == FIXED:
            d = np.full(B, row.d_offset)
            theta = np.full(B, row.theta_offset)
        elif row.joint_type == PRISMATIC:
            d = row.d_offset + Q[:, j]
            theta = np.full(B, row.theta_offset)
            j += 1
        else:
            d = np.full(B, row.d_offset)
            theta = row.theta_offset + Q[:, j]
            j += 1
        ca, sa = math.cos(row.alpha), math.sin(row.alpha)
        ct, st = np.cos(theta), np.sin(theta)
        R_rel = np.zeros((B, 3, 3))
        R_rel[:, 0, 0] = ct
        R_rel[:, 0, 1] = -st
        R_rel[:, 1, 0] = ca * st
        R_rel[:, 1, 1] = ca * ct
        R_rel[:, 1, 2] = -sa
        R_rel[:, 2, 0] = sa * st
        R_rel[:, 2, 1] = sa * ct
        R_rel[:, 2, 2] = ca
        p_rel = np.zeros((B, 3))
        p_rel[:, 0] = row.a
        p_rel[:, 1] = -sa * d
        p_rel[:, 2] = ca * d
        R_parent = rotations[:, i]
        origins[:, i + 1] = origins[:, i] + np.einsum("bij,bj->bi", R_parent, p_rel)
        rotations[:, i + 1] = np.einsum("bij,bjk->bik", R_parent, R_rel)
    return origins, rotations
