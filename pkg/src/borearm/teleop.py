"""400 Hz human-in-the-loop pose integration pipeline.

Each tick: scale and integrate the 6-axis input onto the target pose,
run a short warm-started damped-least-squares IK burst toward it, convert
the joint solution to actuator setpoint counts, and surface rubber-banding
or collision-guard events when the target outruns what the arm can do.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .geometry import InvalidArgumentError, Pose, euler_xyz_to_matrix, orthonormalize
from .kinematics import IkParams, IkResult, JointLimits, forward_kinematics, ik_dls
from .model import RobotModel
from .scene import Scene, check_collision, posed_body
from .transmission import joints_to_actuators, quantize_actuator

TICK_RATE_HZ = 400
NEEDLE_STEP_M = 1e-4   # one jog increment


@dataclass(frozen=True)
class TeleopConfig:
    translation_gain: float = 1e-3          # m per unit input per tick at gamma 1
    rotation_gain: float = math.radians(0.2)  # rad per unit input per tick at gamma 1
    gamma_step: float = 1.25
    gamma_min: float = 0.05
    ik: IkParams = IkParams(max_iterations=3)
    divergence_pos_m: float = 0.01
    divergence_rot_rad: float = 0.35
    collision_guard: bool = False

    def __post_init__(self):
        if not 0 < self.gamma_min <= 1.0:
            raise InvalidArgumentError("gamma_min must be in (0, 1]")
        if self.gamma_step <= 1.0:
            raise InvalidArgumentError("gamma_step must exceed 1")


@dataclass(frozen=True)
class InputSample:
    """One 400 Hz device sample; axes are clamped to [-1, 1] before scaling."""

    v: np.ndarray = field(default_factory=lambda: np.zeros(3))
    r: np.ndarray = field(default_factory=lambda: np.zeros(3))
    gamma_up: bool = False
    gamma_down: bool = False
    needle_jog: int = 0      # +1 advance, -1 retract, 0 hold
    estop: bool = False
    enable: bool = False     # re-arm after an e-stop or watchdog fault

    def __post_init__(self):
        object.__setattr__(self, "v", np.asarray(self.v, dtype=float).reshape(3))
        object.__setattr__(self, "r", np.asarray(self.r, dtype=float).reshape(3))
        if self.needle_jog not in (-1, 0, 1):
            raise InvalidArgumentError("needle_jog must be -1, 0 or +1")

    @staticmethod
    def idle() -> "InputSample":
        return InputSample()


@dataclass
class TeleopState:
    target_position: np.ndarray
    target_rotation: np.ndarray
    gamma: float
    q: np.ndarray
    needle_extension: float

    def copy(self) -> "TeleopState":
        return TeleopState(self.target_position.copy(), self.target_rotation.copy(),
                           self.gamma, self.q.copy(), self.needle_extension)


def integrate_pose(position, rotation, gamma: float, sample: InputSample,
                   config: TeleopConfig):
    """One target-pose update: p += gamma * v, R = euler2mat(gamma * r) @ R.

    The device axes are clamped to [-1, 1] and scaled to per-tick increments
    before the gamma factor; the position update is exactly
    gamma * (gain * v) so halving gamma halves the increment bit for bit.
    The rotation is re-orthonormalized every tick.
    """
    v = np.clip(sample.v, -1.0, 1.0) * config.translation_gain
    r = np.clip(sample.r, -1.0, 1.0) * config.rotation_gain
    new_position = position + gamma * v
    new_rotation = orthonormalize(euler_xyz_to_matrix(gamma * r) @ rotation)
    return new_position, new_rotation


def adjust_gamma(gamma: float, direction: int, config: TeleopConfig | None = None) -> float:
    """Scale the velocity factor up or down one step, clamped to (gamma_min, 1]."""
    config = config or TeleopConfig()
    if direction > 0:
        gamma = gamma * config.gamma_step
    elif direction < 0:
        gamma = gamma / config.gamma_step
    return min(max(gamma, config.gamma_min), 1.0)


def needle_jog(extension: float, direction: int, limits: JointLimits) -> float:
    """Advance or retract the insertion joint target by one 0.1 mm increment."""
    new = extension + float(direction) * NEEDLE_STEP_M
    return float(min(max(new, limits.lower[6]), limits.upper[6]))


@dataclass(frozen=True)
class TickResult:
    setpoints: tuple           # 8-axis counts
    ik: IkResult
    events: tuple
    tip_pose: Pose


class TeleopSession:
    """Single-owner teleoperation state machine; one tick() call per sample."""

    def __init__(self, model: RobotModel, config: TeleopConfig | None = None,
                 scene: Scene | None = None, q0=None):
        self.model = model
        self.config = config or TeleopConfig()
        self.scene = scene
        if self.config.collision_guard and scene is None:
            raise InvalidArgumentError("collision guard requires a scene")
        q = np.asarray(q0, dtype=float).reshape(7) if q0 is not None \
            else model.limits.midpoint()
        model.limits.check(q)
        tip = forward_kinematics(model.dh, q)
        self.state = TeleopState(tip.position.copy(), tip.rotation.copy(),
                                 1.0, q, float(q[6]))
        self.last_achievable = tip
        self.frozen = False
        self.tick_index = 0

    def _pinned_limits(self) -> JointLimits:
        # The jog owns the insertion joint; IK tracks the remaining redundancy.
        ext = self.state.needle_extension
        lower = self.model.limits.lower.copy()
        upper = self.model.limits.upper.copy()
        lower[6] = ext
        upper[6] = ext
        return JointLimits(lower, upper)

    def tick(self, sample: InputSample) -> TickResult:
        events = []
        state = self.state

        if sample.estop:
            events.append("estop")
        if sample.gamma_up != sample.gamma_down:
            state.gamma = adjust_gamma(state.gamma,
                                       1 if sample.gamma_up else -1, self.config)
        if sample.needle_jog:
            new_ext = needle_jog(state.needle_extension, sample.needle_jog,
                                 self.model.limits)
            if new_ext == state.needle_extension:
                events.append("jog_clamped")
            state.needle_extension = new_ext

        if not self.frozen:
            state.target_position, state.target_rotation = integrate_pose(
                state.target_position, state.target_rotation, state.gamma,
                sample, self.config)

        q_start = state.q.copy()
        q_start[6] = state.needle_extension
        target = Pose(state.target_position, state.target_rotation)
        ik = ik_dls(self.model.dh, q_start, target, self.config.ik,
                    limits=self._pinned_limits())

        accepted = True
        if (ik.position_residual > self.config.divergence_pos_m
                or ik.orientation_residual > self.config.divergence_rot_rad):
            events.append("rubber_band")
            accepted = True   # keep the step toward the boundary, snap the target back
        if self.config.collision_guard and self.scene is not None:
            report = check_collision(self.scene, self.model.body, self.model.dh, ik.q)
            if report.in_collision:
                events.append("collision_guard")
                accepted = False

        if accepted:
            state.q = np.asarray(ik.q, dtype=float).copy()
            self.last_achievable = forward_kinematics(self.model.dh, state.q)
        if "rubber_band" in events or not accepted:
            state.target_position = self.last_achievable.position.copy()
            state.target_rotation = self.last_achievable.rotation.copy()

        m = joints_to_actuators(self.model.mixing, state.q)
        counts, _ = quantize_actuator(m, self.model.encoder)
        setpoints = tuple(int(c) for c in counts) + (0,) * (8 - len(counts))
        self.tick_index += 1
        return TickResult(setpoints, ik, tuple(events), self.last_achievable)

    def freeze(self):
        """Controller connection lost: hold state until thawed."""
        self.frozen = True

    def thaw(self):
        self.frozen = False

    def telemetry(self, faults: dict | None = None) -> dict:
        """Snapshot for the cockpit; all values JSON-native."""
        state = self.state
        tip = self.last_achievable
        link_capsules = []
        mount = self.scene.mount if self.scene is not None else Pose.identity()
        for cap in posed_body(self.model.body, self.model.dh, state.q, mount):
            link_capsules.append({"name": cap.name,
                                  "a": [float(x) for x in cap.a],
                                  "b": [float(x) for x in cap.b],
                                  "radius": float(cap.radius)})
        return {
            "type": "state",
            "tick": self.tick_index,
            "q": [float(x) for x in state.q],
            "tip_position": [float(x) for x in tip.position],
            "tip_rotation": [[float(x) for x in row] for row in tip.rotation],
            "gamma": float(state.gamma),
            "needle_extension": float(state.needle_extension),
            "faults": faults or {},
            "links": link_capsules,
        }


# -- input trace files ---------------------------------------------------

def parse_trace_line(line: str) -> tuple[int, InputSample]:
    doc = json.loads(line)
    return int(doc["tick"]), InputSample(
        v=doc.get("v", [0.0, 0.0, 0.0]),
        r=doc.get("r", [0.0, 0.0, 0.0]),
        gamma_up=bool(doc.get("gamma_up", False)),
        gamma_down=bool(doc.get("gamma_down", False)),
        needle_jog=int(doc.get("jog", 0)),
        estop=bool(doc.get("estop", False)),
        enable=bool(doc.get("enable", False)))


def format_trace_line(tick: int, sample: InputSample) -> str:
    return json.dumps({
        "tick": tick,
        "v": [float(x) for x in sample.v],
        "r": [float(x) for x in sample.r],
        "gamma_up": sample.gamma_up,
        "gamma_down": sample.gamma_down,
        "jog": sample.needle_jog,
        "estop": sample.estop,
        "enable": sample.enable,
    }, separators=(",", ":"))


def load_trace(path: str | Path) -> list[tuple[int, InputSample]]:
    """Input trace file: one JSON object per line with a tick index."""
    entries = []
    for raw in Path(path).read_text().splitlines():
        if raw.strip():
            entries.append(parse_trace_line(raw))
    entries.sort(key=lambda item: item[0])
    return entries


def save_trace(path: str | Path, entries) -> Path:
    path = Path(path)
    path.write_text("\n".join(format_trace_line(t, s) for t, s in entries) + "\n")
    return path
