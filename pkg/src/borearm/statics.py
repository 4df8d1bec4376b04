"""Needle-load torque bounds, cable stiffness chain, and bearing load-rating checks.

Worst case for the distal revolute joints is thrust on an outstretched arm:
the needle force acts at the full 0.16 m lever of joint 4 (0.08 m for joint 5)
and joint 6 sees pure axial thrust, so its bound is zero. The stiffness chain
converts cable elongation under tension to joint windup to first-order tip
deflection.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .geometry import InvalidArgumentError

JOINT4_LEVER_M = 0.16
JOINT5_LEVER_M = 0.08
GRAVITY_TORQUE_MARGIN_NM = 0.011   # bound on gravity torques of the cable arm
BIOPSY_THRUST_N = 8.0              # upper end of measured lung-biopsy forces


@dataclass(frozen=True)
class CableMaterial:
    name: str
    tensile_modulus_pa: float
    tensile_strength_pa: float
    dd_ratio: float                  # minimum pulley:cable diameter ratio
    creep_resistance: str            # fair | good | great
    sourcing: str                    # easy | ok | difficult

    def __post_init__(self):
        if self.tensile_modulus_pa <= 0 or self.tensile_strength_pa <= 0:
            raise InvalidArgumentError("cable moduli must be positive")
        if self.creep_resistance not in ("fair", "good", "great"):
            raise InvalidArgumentError(f"unknown creep rating {self.creep_resistance!r}")


def cable_catalog() -> dict[str, CableMaterial]:
    """Catalog of candidate drive cables."""
    materials = [
        CableMaterial("SK99", 155e9, 4.1e9, 5.0, "fair", "easy"),
        CableMaterial("DM20", 94e9, 3.4e9, 8.0, "great", "difficult"),
        CableMaterial("Vectran", 103e9, 3.0e9, 8.0, "good", "ok"),
        CableMaterial("SS", 210e9, 2.0e9, 18.0, "great", "easy"),
    ]
    return {m.name: m for m in materials}


@dataclass(frozen=True)
class CableRun:
    """One cable drive: material plus geometry of the run and its drive pulley."""

    material: CableMaterial
    free_length_m: float
    cross_section_m2: float
    pulley_radius_m: float

    def __post_init__(self):
        if self.free_length_m <= 0 or self.cross_section_m2 <= 0 or self.pulley_radius_m <= 0:
            raise InvalidArgumentError("cable run dimensions must be positive")


def default_cable_run() -> CableRun:
    """Shipped joint-4 drive. Geometry is calibrated, not a published value."""
    return CableRun(cable_catalog()["SK99"], free_length_m=0.75,
                    cross_section_m2=0.5e-6, pulley_radius_m=8e-3)


@dataclass(frozen=True)
class LoadRating:
    bearing_static_rating_n: float = 177.8
    joint_torque_limits_nm: tuple = (2.49, 1.25, 1.25)   # joints 4, 5, 6
    joint7_force_limit_n: float = 177.8

    def __post_init__(self):
        if self.bearing_static_rating_n <= 0 or self.joint7_force_limit_n <= 0:
            raise InvalidArgumentError("ratings must be positive")
        if any(t <= 0 for t in self.joint_torque_limits_nm):
            raise InvalidArgumentError("torque limits must be positive")


def needle_torque_bounds(thrust_n: float) -> tuple[float, float, float]:
    """Worst-case torque on joints 4, 5, 6 from needle thrust (sin term at 1)."""
    if not math.isfinite(thrust_n) or thrust_n < 0:
        raise InvalidArgumentError("needle thrust must be non-negative")
    return (JOINT4_LEVER_M * thrust_n, JOINT5_LEVER_M * thrust_n, 0.0)


def cable_elongation(tension_n: float, run: CableRun) -> float:
    """Elastic stretch of the run: delta_L = F L0 / (A E)."""
    if not math.isfinite(tension_n) or tension_n < 0:
        raise InvalidArgumentError("cable tension must be non-negative")
    return tension_n * run.free_length_m / (
        run.cross_section_m2 * run.material.tensile_modulus_pa)


def joint_compliance(run: CableRun) -> float:
    """Joint windup per unit torque, rad/(N*m).

    Torque tau loads the cable with F = tau / r and the stretch winds the
    joint by delta_theta = delta_L / (2 pi r), so compliance is
    L0 / (2 pi r^2 A E).
    """
    return run.free_length_m / (
        2.0 * math.pi * run.pulley_radius_m ** 2
        * run.cross_section_m2 * run.material.tensile_modulus_pa)


def endeffector_stiffness(run: CableRun, lever_m: float = JOINT4_LEVER_M) -> float:
    """Worst-case linear tip stiffness in N/mm.

    Tip force at the outstretched lever winds the joint; first-order tip
    motion is lever * delta_theta, giving k = 1 / (lever^2 * compliance).
    """
    if lever_m <= 0:
        raise InvalidArgumentError("lever must be positive")
    stiffness_n_per_m = 1.0 / (lever_m ** 2 * joint_compliance(run))
    return stiffness_n_per_m * 1e-3


@dataclass(frozen=True)
class RatingCheck:
    name: str
    demand: float
    limit: float
    margin: float
    passed: bool


@dataclass(frozen=True)
class RatingReport:
    checks: tuple
    all_pass: bool = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "all_pass", all(c.passed for c in self.checks))


def check_load_rating(torques_nm, needle_force_n: float,
                      rating: LoadRating | None = None,
                      gravity_margin_nm: float = GRAVITY_TORQUE_MARGIN_NM) -> RatingReport:
    """Compare joint demands (plus the gravity-torque margin) to the ratings."""
    rating = rating or LoadRating()
    torques_nm = tuple(float(t) for t in torques_nm)
    if len(torques_nm) != 3:
        raise InvalidArgumentError("expected torques for joints 4, 5, 6")
    if not all(math.isfinite(t) for t in torques_nm) or not math.isfinite(needle_force_n):
        raise InvalidArgumentError("demands must be finite")
    checks = []
    for idx, (tau, limit) in enumerate(zip(torques_nm, rating.joint_torque_limits_nm)):
        demand = abs(tau) + gravity_margin_nm
        checks.append(RatingCheck(f"joint {idx + 4} torque", demand, limit,
                                  limit - demand, demand <= limit))
    demand = abs(float(needle_force_n))
    checks.append(RatingCheck("joint 7 thrust", demand, rating.joint7_force_limit_n,
                              rating.joint7_force_limit_n - demand,
                              demand <= rating.joint7_force_limit_n))
    return RatingReport(tuple(checks))


def statics_report(run: CableRun | None = None,
                   thrust_n: float = BIOPSY_THRUST_N,
                   rating: LoadRating | None = None) -> dict:
    """Full statics summary used by the CLI report."""
    run = run or default_cable_run()
    rating = rating or LoadRating()
    tau = needle_torque_bounds(thrust_n)
    compliance = joint_compliance(run)
    stiffness = endeffector_stiffness(run)
    report = check_load_rating(tau, thrust_n, rating)
    return {
        "thrust_n": thrust_n,
        "torque_bounds_nm": tau,
        "rating": report,
        "cable": run,
        "joint_compliance_rad_per_nm": compliance,
        "stiffness_n_per_mm": stiffness,
        "deflection_mm_per_n": 1.0 / stiffness,
        "materials": cable_catalog(),
    }


def format_statics_report(report: dict) -> str:
    """Human-readable table for the statics CLI subcommand."""
    lines = []
    tau = report["torque_bounds_nm"]
    lines.append(f"Needle thrust: {report['thrust_n']:g} N")
    lines.append("")
    lines.append("Worst-case joint torque bounds")
    lines.append(f"  joint 4: {tau[0]:g} N*m")
    lines.append(f"  joint 5: {tau[1]:g} N*m")
    lines.append(f"  joint 6: {tau[2]:g} N*m")
    lines.append("")
    lines.append(f"Load-rating checks (gravity margin {GRAVITY_TORQUE_MARGIN_NM:g} N*m on torques)")
    for c in report["rating"].checks:
        verdict = "PASS" if c.passed else "FAIL"
        lines.append(f"  {c.name:<16} demand {c.demand:8.3f}  limit {c.limit:8.3f}  "
                     f"margin {c.margin:8.3f}  {verdict}")
    lines.append("")
    run = report["cable"]
    lines.append(f"Drive cable: {run.material.name} "
                 f"(E = {run.material.tensile_modulus_pa / 1e9:g} GPa), "
                 f"L0 = {run.free_length_m:g} m, A = {run.cross_section_m2 * 1e6:g} mm^2, "
                 f"r = {run.pulley_radius_m * 1e3:g} mm  [geometry calibrated, not published]")
    lines.append(f"  joint compliance:       {report['joint_compliance_rad_per_nm']:.4g} rad/(N*m)")
    lines.append(f"  end-effector stiffness: {report['stiffness_n_per_mm']:.3f} N/mm "
                 f"(>= 1.55 target)")
    lines.append(f"  deflection per newton:  {report['deflection_mm_per_n']:.3f} mm/N "
                 f"(<= 0.645 target)")
    lines.append("")
    lines.append("Cable material catalog")
    lines.append("  name     E (GPa)  strength (GPa)  D:d   creep  sourcing")
    for m in report["materials"].values():
        lines.append(f"  {m.name:<8} {m.tensile_modulus_pa / 1e9:<8g} "
                     f"{m.tensile_strength_pa / 1e9:<15g} {m.dd_ratio:<5g} "
                     f"{m.creep_resistance:<6} {m.sourcing}")
    return "\n".join(lines)
