"""Actuator-space <-> joint-space conversion and encoder-count quantization.

The mixing matrix maps actuator displacements m to joint displacements q via
q = M m. One actuator unit is one gearbox-output revolution; the belt and
cable reductions plus the cable-wrap coupling of the distal joints make M
lower-triangular. Encoder arithmetic lives at the motor shaft: a 500-line
quadrature encoder (2000 counts/rev) behind a 479:1 gearbox.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import InvalidArgumentError
from .kinematics import N_JOINTS


class SingularTransmissionError(ValueError):
    """The mixing matrix has a zero diagonal entry and cannot be inverted."""


class CountRangeError(OverflowError):
    """A quantized count exceeds the configured integer width."""


@dataclass(frozen=True)
class MixingMatrix:
    M: np.ndarray

    def __post_init__(self):
        M = np.asarray(self.M, dtype=float).reshape(N_JOINTS, N_JOINTS)
        object.__setattr__(self, "M", M)
        if not np.all(np.isfinite(M)):
            raise InvalidArgumentError("mixing matrix contains non-finite values")
        upper = np.triu(M, k=1)
        if np.any(upper != 0.0):
            raise InvalidArgumentError("mixing matrix must be lower-triangular")
        if np.any(np.diag(M) == 0.0):
            raise SingularTransmissionError("mixing matrix has a zero diagonal entry")


@dataclass(frozen=True)
class EncoderSpec:
    counts_per_motor_rev: int = 2000   # 500-line quadrature x4
    gear_ratio: int = 479
    count_bits: int = 32               # signed width of the hardware counters

    @property
    def counts_per_output_rev(self) -> int:
        return self.counts_per_motor_rev * self.gear_ratio

    @property
    def resolution_deg_per_count(self) -> float:
        """Output-shaft resolution in degrees per count."""
        return 360.0 / self.counts_per_output_rev

    @property
    def max_count(self) -> int:
        return 2 ** (self.count_bits - 1) - 1


def actuators_to_joints(mixing: MixingMatrix, m) -> np.ndarray:
    """q = M m."""
    m = np.asarray(m, dtype=float).reshape(N_JOINTS)
    if not np.all(np.isfinite(m)):
        raise InvalidArgumentError("actuator vector contains non-finite values")
    return mixing.M @ m


def joints_to_actuators(mixing: MixingMatrix, q) -> np.ndarray:
    """Solve M m = q by forward substitution (M is lower-triangular)."""
    q = np.asarray(q, dtype=float).reshape(N_JOINTS)
    if not np.all(np.isfinite(q)):
        raise InvalidArgumentError("joint vector contains non-finite values")
    M = mixing.M
    m = np.zeros(N_JOINTS)
    for i in range(N_JOINTS):
        m[i] = (q[i] - M[i, :i] @ m[:i]) / M[i, i]
    return m


def quantize_actuator(m, spec: EncoderSpec):
    """Round actuator positions to whole encoder counts.

    Returns (counts, quantized_m). Rounds to nearest with ties away from zero,
    so quantization error never exceeds half a count.
    """
    m = np.asarray(m, dtype=float).reshape(-1)
    if not np.all(np.isfinite(m)):
        raise InvalidArgumentError("actuator vector contains non-finite values")
    scale = float(spec.counts_per_output_rev)
    raw = m * scale
    rounded = np.copysign(np.floor(np.abs(raw) + 0.5), raw)
    if np.any(np.abs(rounded) > spec.max_count):
        worst = int(np.argmax(np.abs(rounded)))
        raise CountRangeError(
            f"actuator {worst + 1} needs {int(rounded[worst])} counts, "
            f"beyond the {spec.count_bits}-bit counter range")
    counts = rounded.astype(np.int64)
    return counts, counts / scale


def counts_to_actuators(counts, spec: EncoderSpec) -> np.ndarray:
    counts = np.asarray(counts, dtype=np.int64).reshape(-1)
    return counts / float(spec.counts_per_output_rev)


def actuator_count_bounds(mixing: MixingMatrix, lower_q, upper_q,
                          spec: EncoderSpec):
    """Per-actuator count bounds covering the joint-limit box.

    The joint box maps to a zonotope in actuator space; interval arithmetic on
    M^-1 gives its exact axis-aligned bounding box, which is what a per-axis
    setpoint range check needs.
    """
    lower_q = np.asarray(lower_q, dtype=float).reshape(N_JOINTS)
    upper_q = np.asarray(upper_q, dtype=float).reshape(N_JOINTS)
    A = np.linalg.inv(mixing.M)
    center_q = (lower_q + upper_q) / 2.0
    half_q = (upper_q - lower_q) / 2.0
    center_m = A @ center_q
    half_m = np.abs(A) @ half_q
    scale = float(spec.counts_per_output_rev)
    low = np.floor((center_m - half_m) * scale).astype(np.int64)
    high = np.ceil((center_m + half_m) * scale).astype(np.int64)
    return low, high


def encoder_resolution_matches(spec: EncoderSpec, quoted: float = 3.7e-4,
                               sig_figs: int = 2) -> bool:
    """Check the derived output-shaft resolution against a quoted value.

    Agreement means the derived value sits within one unit in the last
    significant digit of the quote (the quote is a truncated figure, so a
    straight round-and-compare would be stricter than the quote itself).
    """
    actual = spec.resolution_deg_per_count
    if quoted <= 0 or actual <= 0:
        return False
    ulp = 10.0 ** (math.floor(math.log10(quoted)) - sig_figs + 1)
    return abs(actual - quoted) <= ulp
