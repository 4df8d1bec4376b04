"""Collision world: CT bore, patient, table, and the robot's capsule body.

Primitives are deliberately simple (capsules, one hollow cylinder, one box):
they keep the Monte Carlo workspace study fast and dependency-free while
still capturing what matters at desk scale. A vertex-list hook lets the
binning run against an externally supplied patient mesh instead.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

from .geometry import InvalidArgumentError, Pose, euler_xyz_to_matrix
from .kinematics import DHTable, JointLimits, batch_fk_frames, fk_frames
from .model import ModelFormatError, RobotModel

_EPS = 1e-12


def _seg_seg_distance_batch(p1, q1, p2, q2) -> np.ndarray:
    """Minimum distance between segment batches [p1,q1] and [p2,q2], shape (B,)."""
    p1 = np.asarray(p1, dtype=float)
    q1 = np.asarray(q1, dtype=float)
    p2 = np.asarray(p2, dtype=float)
    q2 = np.asarray(q2, dtype=float)
    d1 = q1 - p1
    d2 = q2 - p2
    r = p1 - p2
    a = np.einsum("bi,bi->b", d1, d1)
    e = np.einsum("bi,bi->b", d2, d2)
    f = np.einsum("bi,bi->b", d2, r)
    c = np.einsum("bi,bi->b", d1, r)
    b = np.einsum("bi,bi->b", d1, d2)

    a_deg = a <= _EPS
    e_deg = e <= _EPS
    safe_a = np.where(a_deg, 1.0, a)
    safe_e = np.where(e_deg, 1.0, e)

    denom = a * e - b * b
    s = np.where(denom > _EPS, (b * f - c * e) / np.where(denom > _EPS, denom, 1.0), 0.0)
    s = np.clip(s, 0.0, 1.0)
    t = (b * s + f) / safe_e
    # Re-clamp: if t left [0,1], pin it and recompute the optimal s.
    t_low = t < 0.0
    t_high = t > 1.0
    t = np.clip(t, 0.0, 1.0)
    s = np.where(t_low, np.clip(-c / safe_a, 0.0, 1.0), s)
    s = np.where(t_high, np.clip((b - c) / safe_a, 0.0, 1.0), s)
    # Degenerate segments fall back to point projections.
    s = np.where(a_deg, 0.0, s)
    t = np.where(a_deg, np.clip(f / safe_e, 0.0, 1.0), t)
    t = np.where(e_deg, 0.0, t)
    s = np.where(e_deg & ~a_deg, np.clip(-c / safe_a, 0.0, 1.0), s)
    t = np.where(a_deg & e_deg, 0.0, t)
    s = np.where(a_deg & e_deg, 0.0, s)

    closest1 = p1 + s[:, None] * d1
    closest2 = p2 + t[:, None] * d2
    return np.linalg.norm(closest1 - closest2, axis=1)


def segment_segment_distance(p1, p2, p3, p4) -> float:
    """Minimum distance between closed segments [p1,p2] and [p3,p4]."""
    pts = [np.asarray(p, dtype=float).reshape(3) for p in (p1, p2, p3, p4)]
    if not all(np.all(np.isfinite(p)) for p in pts):
        raise InvalidArgumentError("segment endpoints must be finite")
    return float(_seg_seg_distance_batch(pts[0][None], pts[1][None],
                                         pts[2][None], pts[3][None])[0])


@dataclass(frozen=True)
class Capsule:
    a: np.ndarray
    b: np.ndarray
    radius: float
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "a", np.asarray(self.a, dtype=float).reshape(3))
        object.__setattr__(self, "b", np.asarray(self.b, dtype=float).reshape(3))
        if self.radius <= 0:
            raise InvalidArgumentError("capsule radius must be positive")


def capsule_capsule_distance(c1: Capsule, c2: Capsule) -> float:
    """Surface distance (negative = penetration depth)."""
    d = segment_segment_distance(c1.a, c1.b, c2.a, c2.b)
    return d - c1.radius - c2.radius


@dataclass(frozen=True)
class Bore:
    """Hollow cylinder; collisions happen when bodies poke through the wall."""

    center: np.ndarray
    axis: np.ndarray
    inner_radius: float
    length: float

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float).reshape(3))
        axis = np.asarray(self.axis, dtype=float).reshape(3)
        norm = np.linalg.norm(axis)
        if norm <= 0:
            raise InvalidArgumentError("bore axis must be nonzero")
        object.__setattr__(self, "axis", axis / norm)
        if self.inner_radius <= 0 or self.length <= 0:
            raise InvalidArgumentError("bore dimensions must be positive")


@dataclass(frozen=True)
class Box:
    """Axis-aligned box in the scene frame."""

    center: np.ndarray
    half_extents: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float).reshape(3))
        object.__setattr__(self, "half_extents",
                           np.asarray(self.half_extents, dtype=float).reshape(3))
        if np.any(self.half_extents <= 0):
            raise InvalidArgumentError("box half extents must be positive")


@dataclass(frozen=True)
class Scene:
    """Immutable collision world; share freely across Monte Carlo workers."""

    bore: Bore | None
    table: Box | None
    patient: tuple
    mount: Pose
    name: str = "scene"
    targets_file: str | None = None
    self_collision: bool = True   # empty baseline scenes turn this off too


@dataclass(frozen=True)
class CollisionPair:
    body_a: str
    body_b: str
    depth: float


@dataclass(frozen=True)
class CollisionReport:
    pairs: tuple
    in_collision: bool = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "in_collision", len(self.pairs) > 0)


def posed_body(body, dh: DHTable, q, mount: Pose,
               limits: JointLimits | None = None) -> list[Capsule]:
    """World-frame capsules of the robot body at configuration q."""
    frames = fk_frames(dh, q, limits)
    capsules = []
    for link in body:
        frame = mount.compose(frames[link.frame])
        capsules.append(Capsule(frame.transform_point(link.a),
                                frame.transform_point(link.b),
                                link.radius, link.name))
    return capsules


def _bore_penetration(capsule: Capsule, bore: Bore) -> float:
    """Wall penetration depth of a capsule, 0.0 when safely inside.

    Only the part of the capsule axially inside the bore is constrained; the
    radial distance along a segment is convex, so its maximum over the clipped
    segment is attained at a clipped endpoint.
    """
    rel_a = capsule.a - bore.center
    rel_b = capsule.b - bore.center
    s_a = float(np.dot(rel_a, bore.axis))
    s_b = float(np.dot(rel_b, bore.axis))
    half = bore.length / 2.0
    ds = s_b - s_a
    if abs(ds) < _EPS:
        if not (-half <= s_a <= half):
            return 0.0
        t0, t1 = 0.0, 1.0
    else:
        t0 = (-half - s_a) / ds
        t1 = (half - s_a) / ds
        t0, t1 = min(t0, t1), max(t0, t1)
        t0, t1 = max(t0, 0.0), min(t1, 1.0)
        if t0 > t1:
            return 0.0
    worst = 0.0
    for t in (t0, t1):
        p = rel_a + t * (rel_b - rel_a)
        radial = p - np.dot(p, bore.axis) * bore.axis
        worst = max(worst, float(np.linalg.norm(radial)))
    return max(0.0, worst + capsule.radius - bore.inner_radius)


def _point_box_distance_batch(p, box: Box) -> np.ndarray:
    d = np.maximum(np.abs(p - box.center) - box.half_extents, 0.0)
    return np.linalg.norm(d, axis=-1)


def _segment_box_distance_batch(a, b, box: Box, iters: int = 80) -> np.ndarray:
    """Min distance from segments to an axis-aligned box via ternary search.

    Point-box distance is convex and the segment parameterization is affine,
    so the 1-D problem is convex; 80 ternary iterations shrink the bracket
    below 1e-12 of the segment length.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    lo = np.zeros(a.shape[0])
    hi = np.ones(a.shape[0])
    for _ in range(iters):
        m1 = lo + (hi - lo) / 3.0
        m2 = hi - (hi - lo) / 3.0
        f1 = _point_box_distance_batch(a + m1[:, None] * (b - a), box)
        f2 = _point_box_distance_batch(a + m2[:, None] * (b - a), box)
        shrink_hi = f1 < f2
        hi = np.where(shrink_hi, m2, hi)
        lo = np.where(shrink_hi, lo, m1)
    mid = (lo + hi) / 2.0
    return _point_box_distance_batch(a + mid[:, None] * (b - a), box)


def segment_box_distance(a, b, box: Box) -> float:
    return float(_segment_box_distance_batch(np.asarray(a, dtype=float)[None],
                                             np.asarray(b, dtype=float)[None], box)[0])


def _self_pairs(body) -> list[tuple[int, int]]:
    """Self-collision candidates: every non-adjacent pair of the link chain.

    Adjacent links share a joint, always touch there, and are excluded.
    """
    n = len(body)
    return [(i, j) for i in range(n) for j in range(i + 2, n)]


def check_collision(scene: Scene, body, dh: DHTable, q,
                    limits: JointLimits | None = None) -> CollisionReport:
    """Full collision query for one configuration; deterministic."""
    capsules = posed_body(body, dh, q, scene.mount, limits)
    pairs = []
    for cap in capsules:
        for patient_cap in scene.patient:
            gap = capsule_capsule_distance(cap, patient_cap)
            if gap < 0.0:
                pairs.append(CollisionPair(f"link:{cap.name}",
                                           f"patient:{patient_cap.name}", -gap))
        if scene.bore is not None:
            depth = _bore_penetration(cap, scene.bore)
            if depth > 0.0:
                pairs.append(CollisionPair(f"link:{cap.name}", "bore", depth))
        if scene.table is not None:
            gap = segment_box_distance(cap.a, cap.b, scene.table) - cap.radius
            if gap < 0.0:
                pairs.append(CollisionPair(f"link:{cap.name}", "table", -gap))
    if scene.self_collision:
        for i, j in _self_pairs(body):
            gap = capsule_capsule_distance(capsules[i], capsules[j])
            if gap < 0.0:
                pairs.append(CollisionPair(f"link:{capsules[i].name}",
                                           f"link:{capsules[j].name}", -gap))
    return CollisionReport(tuple(pairs))


def collision_free_mask(scene: Scene, body, dh: DHTable, Q: np.ndarray) -> np.ndarray:
    """Vectorized collision verdicts for a batch of configurations.

    Agrees with check_collision sample for sample (same kernels, batched); the
    workspace sampler uses this path for throughput.
    """
    Q = np.asarray(Q, dtype=float)
    if Q.ndim == 1:
        Q = Q[None, :]
    B = Q.shape[0]
    origins, rotations = batch_fk_frames(dh, Q)
    mount_R = scene.mount.rotation
    mount_p = scene.mount.position

    ends_a = []
    ends_b = []
    for link in body:
        R = np.einsum("ij,bjk->bik", mount_R, rotations[:, link.frame])
        c = mount_p + np.einsum("ij,bj->bi", mount_R, origins[:, link.frame])
        ends_a.append(c + np.einsum("bij,j->bi", R, link.a))
        ends_b.append(c + np.einsum("bij,j->bi", R, link.b))

    colliding = np.zeros(B, dtype=bool)
    for idx, link in enumerate(body):
        a, b = ends_a[idx], ends_b[idx]
        for patient_cap in scene.patient:
            pa = np.broadcast_to(patient_cap.a, (B, 3))
            pb = np.broadcast_to(patient_cap.b, (B, 3))
            d = _seg_seg_distance_batch(a, b, pa, pb)
            colliding |= d < (link.radius + patient_cap.radius)
        if scene.bore is not None:
            colliding |= _bore_penetration_batch(a, b, link.radius, scene.bore) > 0.0
        if scene.table is not None:
            colliding |= _segment_box_distance_batch(a, b, scene.table) < link.radius
    if scene.self_collision:
        for i, j in _self_pairs(body):
            d = _seg_seg_distance_batch(ends_a[i], ends_b[i], ends_a[j], ends_b[j])
            colliding |= d < (body[i].radius + body[j].radius)
    return ~colliding


def _bore_penetration_batch(a, b, radius: float, bore: Bore) -> np.ndarray:
    rel_a = a - bore.center
    rel_b = b - bore.center
    s_a = rel_a @ bore.axis
    s_b = rel_b @ bore.axis
    half = bore.length / 2.0
    ds = s_b - s_a
    parallel = np.abs(ds) < _EPS
    safe_ds = np.where(parallel, 1.0, ds)
    t0 = (-half - s_a) / safe_ds
    t1 = (half - s_a) / safe_ds
    lo = np.minimum(t0, t1)
    hi = np.maximum(t0, t1)
    lo = np.where(parallel, 0.0, np.maximum(lo, 0.0))
    hi = np.where(parallel, 1.0, np.minimum(hi, 1.0))
    outside = np.where(parallel, np.abs(s_a) > half, lo > hi)

    seg = rel_b - rel_a
    worst = np.zeros(a.shape[0])
    for t in (lo, hi):
        p = rel_a + t[:, None] * seg
        axial = p @ bore.axis
        radial = p - axial[:, None] * bore.axis
        worst = np.maximum(worst, np.linalg.norm(radial, axis=1))
    depth = np.maximum(0.0, worst + radius - bore.inner_radius)
    return np.where(outside, 0.0, depth)


def frontal_cross_section(model: RobotModel, q=None, axis: int = 2):
    """Bounding box (width, height) of the in-bore links in the transverse plane.

    Projects the in_bore capsule disks onto the base-frame plane perpendicular
    to the given axis (default z, the bore direction at mount).
    """
    if q is None:
        q = np.zeros(7)
    frames = fk_frames(model.dh, q)
    axes = [i for i in range(3) if i != axis]
    lo = np.full(2, np.inf)
    hi = np.full(2, -np.inf)
    for link in model.body:
        if not link.in_bore:
            continue
        frame = frames[link.frame]
        for local in (link.a, link.b):
            p = frame.transform_point(local)[axes]
            lo = np.minimum(lo, p - link.radius)
            hi = np.maximum(hi, p + link.radius)
    if np.any(~np.isfinite(lo)):
        raise InvalidArgumentError("no in_bore links in the model body")
    return float(hi[0] - lo[0]), float(hi[1] - lo[1])


def patient_vertices(scene: Scene, spacing: float = 0.04) -> np.ndarray:
    """Deterministic point lattice on the patient capsule surfaces.

    Stands in for mesh vertices when no targets file is supplied: rings along
    each capsule axis plus hemispherical caps, ordered capsule by capsule.
    """
    if spacing <= 0:
        raise InvalidArgumentError("spacing must be positive")
    points = []
    for cap in scene.patient:
        axis = cap.b - cap.a
        length = float(np.linalg.norm(axis))
        direction = axis / length if length > _EPS else np.array([0.0, 0.0, 1.0])
        # Orthonormal frame around the axis.
        helper = np.array([1.0, 0.0, 0.0])
        if abs(np.dot(helper, direction)) > 0.9:
            helper = np.array([0.0, 1.0, 0.0])
        u = np.cross(direction, helper)
        u /= np.linalg.norm(u)
        v = np.cross(direction, u)
        n_axial = max(2, int(round(length / spacing)) + 1)
        n_circ = max(6, int(round(2.0 * np.pi * cap.radius / spacing)))
        angles = 2.0 * np.pi * np.arange(n_circ) / n_circ
        ring = cap.radius * (np.outer(np.cos(angles), u) + np.outer(np.sin(angles), v))
        for k in range(n_axial):
            center = cap.a + direction * (length * k / (n_axial - 1))
            points.append(center + ring)
        for pole_center, sign in ((cap.a, -1.0), (cap.b, 1.0)):
            points.append((pole_center + sign * direction * cap.radius)[None, :])
    return np.vstack(points)


def load_scene(path: str | Path | None = None) -> Scene:
    """Load a scene file; None loads the shipped default."""
    if path is None:
        text = resources.files("borearm.data").joinpath("scene.yaml").read_text()
    else:
        path = Path(path)
        if not path.exists():
            raise ModelFormatError(f"scene file not found: {path}")
        text = path.read_text()
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ModelFormatError(f"scene file is not valid YAML: {exc}") from exc
    if not isinstance(doc, dict):
        raise ModelFormatError("scene file must be a mapping")

    bore = None
    if doc.get("bore") is not None:
        b = doc["bore"]
        bore = Bore(center=b.get("center", [0.0, 0.0, 0.0]),
                    axis=b.get("axis", [0.0, 0.0, 1.0]),
                    inner_radius=float(b.get("inner_radius", 0.325)),
                    length=float(b.get("length", 2.0)))
    table = None
    if doc.get("table") is not None:
        t = doc["table"]
        table = Box(center=t["center"], half_extents=t["half_extents"])
    patient = []
    for entry in doc.get("patient", []) or []:
        patient.append(Capsule(entry["a"], entry["b"], float(entry["radius"]),
                               str(entry.get("name", f"capsule{len(patient)}"))))
    mount_doc = doc.get("mount", {}) or {}
    mount = Pose(np.asarray(mount_doc.get("position", [0.0, 0.0, 0.0]), dtype=float),
                 euler_xyz_to_matrix(mount_doc.get("rpy", [0.0, 0.0, 0.0])))
    return Scene(bore=bore, table=table, patient=tuple(patient), mount=mount,
                 name=str(doc.get("name", "scene")),
                 targets_file=doc.get("targets_file"),
                 self_collision=bool(doc.get("self_collision", True)))


def default_scene() -> Scene:
    return load_scene(None)


def empty_scene() -> Scene:
    """No collision constraints at all; every in-limit configuration is free."""
    return Scene(bore=None, table=None, patient=(), mount=Pose.identity(),
                 name="empty", self_collision=False)
