"""Emulated embedded 8-axis motor controller.

Per-axis positional PID loops run at a fixed 1 kHz timestep over a
first-order DC-motor plant. Time is simulated (an integer tick counter), so
every trajectory is a pure function of the initial state and the message
trace; a real-time pacing mode only changes when ticks happen, never what
they compute. Setpoint, enable/disable, e-stop and status messages apply
atomically between ticks.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import InvalidArgumentError

N_AXES = 8
DEFAULT_TIMESTEP_S = 1e-3
DEFAULT_WATCHDOG_S = 0.1

# Free speed of the drive at full duty: 10900 rpm at the motor shaft with a
# 2000 count/rev encoder. The 20 ms mechanical time constant is a modeling
# choice, not a datasheet number.
DEFAULT_SPEED_PER_DUTY = 10900.0 / 60.0 * 2000.0
DEFAULT_TIME_CONSTANT_S = 0.02


@dataclass(frozen=True)
class PidGains:
    kp: float = 3.44e-3
    ki: float = 0.0
    kd: float = 2.48e-5
    output_limit: float = 1.0
    integral_limit: float = 1000.0

    def __post_init__(self):
        if self.output_limit <= 0 or self.integral_limit <= 0:
            raise InvalidArgumentError("limits must be positive")
        if self.kp < 0 or self.ki < 0 or self.kd < 0:
            raise InvalidArgumentError("gains must be >= 0")


@dataclass(frozen=True)
class PlantParams:
    speed_per_duty: float = DEFAULT_SPEED_PER_DUTY   # counts/s at duty 1.0
    time_constant_s: float = DEFAULT_TIME_CONSTANT_S

    def __post_init__(self):
        if self.speed_per_duty <= 0 or self.time_constant_s <= 0:
            raise InvalidArgumentError("plant parameters must be positive")


@dataclass
class AxisState:
    position: float = 0.0      # counts (continuous plant state)
    velocity: float = 0.0      # counts/s
    integral: float = 0.0
    last_error: float = 0.0
    command: float = 0.0       # last applied duty

    @property
    def encoder_counts(self) -> int:
        return int(round(self.position))

    def reset_pid(self):
        self.integral = 0.0
        self.last_error = 0.0


@dataclass
class SafetyState:
    enabled: bool = False
    estop_latched: bool = False
    watchdog_expired: bool = False
    last_setpoint_tick: int = 0


def pid_step(gains: PidGains, state: AxisState, setpoint: float, measured: float,
             dt: float) -> float:
    """Positional PID with derivative on error, clamped integral and output."""
    if dt <= 0:
        raise InvalidArgumentError("dt must be positive")
    error = float(setpoint) - float(measured)
    state.integral = min(max(state.integral + error * dt, -gains.integral_limit),
                         gains.integral_limit)
    derivative = (error - state.last_error) / dt
    state.last_error = error
    command = gains.kp * error + gains.ki * state.integral + gains.kd * derivative
    command = min(max(command, -gains.output_limit), gains.output_limit)
    state.command = command
    return command


def plant_step(params: PlantParams, state: AxisState, duty: float, dt: float):
    """First-order velocity plant, semi-implicit Euler.

    v' = (K*duty - v) / T_m; position integrates the updated velocity.
    """
    state.velocity += dt * (params.speed_per_duty * duty - state.velocity) / params.time_constant_s
    state.position += dt * state.velocity
    return state.position, state.velocity


@dataclass(frozen=True)
class ControllerConfig:
    gains: tuple = tuple(PidGains() for _ in range(N_AXES))
    plants: tuple = tuple(PlantParams() for _ in range(N_AXES))
    timestep_s: float = DEFAULT_TIMESTEP_S
    watchdog_timeout_s: float = DEFAULT_WATCHDOG_S
    count_limits: tuple | None = None    # optional ((low..), (high..)) per axis

    def __post_init__(self):
        if len(self.gains) != N_AXES or len(self.plants) != N_AXES:
            raise InvalidArgumentError(f"need {N_AXES} gain/plant entries")
        if self.timestep_s <= 0 or self.watchdog_timeout_s <= 0:
            raise InvalidArgumentError("timestep and watchdog timeout must be positive")

    @property
    def watchdog_ticks(self) -> int:
        return max(1, int(round(self.watchdog_timeout_s / self.timestep_s)))


class ControllerSim:
    """Deterministic multi-axis control loop; callers serialize access."""

    def __init__(self, config: ControllerConfig | None = None):
        self.config = config or ControllerConfig()
        self.axes = [AxisState() for _ in range(N_AXES)]
        self.safety = SafetyState()
        self.setpoints = np.zeros(N_AXES, dtype=np.int64)
        self.tick_index = 0

    # -- message handling -------------------------------------------------

    def apply(self, msg: dict) -> dict:
        """Apply one protocol message; must be called between ticks."""
        if not isinstance(msg, dict) or "cmd" not in msg:
            return {"ok": False, "error": "message must be an object with a 'cmd' field"}
        cmd = msg["cmd"]
        if cmd == "set_setpoints":
            return self._apply_setpoints(msg)
        if cmd == "enable":
            self.safety.enabled = True
            self.safety.estop_latched = False
            self.safety.watchdog_expired = False
            self.safety.last_setpoint_tick = self.tick_index
            for axis in self.axes:
                axis.reset_pid()
            return {"ok": True}
        if cmd == "disable":
            self.safety.enabled = False
            return {"ok": True}
        if cmd == "estop":
            self.safety.estop_latched = True
            self.safety.enabled = False
            return {"ok": True}
        if cmd == "status":
            return {"ok": True, "status": self.snapshot()}
        return {"ok": False, "error": f"unknown command {cmd!r}"}

    def _apply_setpoints(self, msg: dict) -> dict:
        counts = msg.get("counts")
        if (not isinstance(counts, (list, tuple)) or len(counts) != N_AXES
                or not all(isinstance(c, int) for c in counts)):
            return {"ok": False,
                    "error": f"'counts' must be {N_AXES} integers"}
        if self.config.count_limits is not None:
            low, high = self.config.count_limits
            rejected = [{"axis": i, "reason": f"count {c} outside [{int(low[i])}, {int(high[i])}]"}
                        for i, c in enumerate(counts)
                        if not (low[i] <= c <= high[i])]
            if rejected:
                return {"ok": False, "error": "setpoint out of range", "axes": rejected}
        self.setpoints = np.asarray(counts, dtype=np.int64)
        self.safety.last_setpoint_tick = self.tick_index
        return {"ok": True, "tick": self.tick_index}

    # -- simulation -------------------------------------------------------

    def tick(self) -> np.ndarray:
        """Advance one control period; returns the applied duty commands."""
        dt = self.config.timestep_s
        safety = self.safety
        if safety.enabled and not safety.estop_latched:
            gap = self.tick_index - safety.last_setpoint_tick
            if gap > self.config.watchdog_ticks:
                safety.enabled = False
                safety.watchdog_expired = True
        drive = safety.enabled and not safety.estop_latched
        commands = np.zeros(N_AXES)
        for i, axis in enumerate(self.axes):
            if drive:
                duty = pid_step(self.config.gains[i], axis,
                                float(self.setpoints[i]), float(axis.encoder_counts), dt)
            else:
                duty = 0.0
                axis.command = 0.0
            commands[i] = duty
            plant_step(self.config.plants[i], axis, duty, dt)
        self.tick_index += 1
        return commands

    def run(self, ticks: int):
        for _ in range(ticks):
            self.tick()

    def snapshot(self) -> dict:
        return {
            "tick": self.tick_index,
            "sim_time_s": self.tick_index * self.config.timestep_s,
            "enabled": self.safety.enabled,
            "estop": self.safety.estop_latched,
            "watchdog_expired": self.safety.watchdog_expired,
            "positions": [axis.encoder_counts for axis in self.axes],
            "velocities": [axis.velocity for axis in self.axes],
            "commands": [axis.command for axis in self.axes],
            "setpoints": [int(s) for s in self.setpoints],
            "loop": {"timestep_s": self.config.timestep_s,
                     "watchdog_timeout_s": self.config.watchdog_timeout_s},
        }

    def replay(self, trace, total_ticks: int) -> list:
        """Apply a (tick, message) trace while running to total_ticks.

        Messages stamped for tick t apply after tick t-1 and before tick t,
        mirroring the live server's between-ticks contract. Returns the
        position trajectory, one 8-vector per tick.
        """
        ordered = sorted(trace, key=lambda item: item[0])
        trajectory = []
        idx = 0
        for t in range(total_ticks):
            while idx < len(ordered) and ordered[idx][0] <= t:
                self.apply(ordered[idx][1])
                idx += 1
            self.tick()
            trajectory.append([axis.position for axis in self.axes])
        return trajectory
