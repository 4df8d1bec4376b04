"""Monte Carlo collision-free reachability study and dexterity heat map.

Samples the first six joints uniformly (the insertion joint stays retracted:
it advances the needle only after a target pose is reached), records the
tool pose and collision verdict for each draw, and bins collision-free tip
positions against target vertices within a fixed radius.

Sampling is chunked: chunk c always draws from a generator seeded with
(seed, c), so any number of workers produces bit-identical output.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.spatial import cKDTree

from .geometry import InvalidArgumentError, Pose
from .kinematics import batch_fk_frames
from .model import RobotModel
from .scene import Scene, collision_free_mask

DEFAULT_RADIUS_M = 5e-3
_CHUNK = 4096


@dataclass(frozen=True)
class SampleRecord:
    q: np.ndarray
    tip_pose: Pose
    collision_free: bool


@dataclass(frozen=True)
class WorkspaceSamples:
    """Column-oriented batch of samples; iterate for per-record views."""

    q: np.ndarray              # (N, 7), q7 = 0
    tip_position: np.ndarray   # (N, 3), scene frame
    tip_rotation: np.ndarray   # (N, 3, 3), scene frame
    collision_free: np.ndarray # (N,) bool

    def __len__(self) -> int:
        return self.q.shape[0]

    def __iter__(self):
        for i in range(len(self)):
            yield SampleRecord(self.q[i], Pose(self.tip_position[i], self.tip_rotation[i]),
                               bool(self.collision_free[i]))

    @property
    def free_fraction(self) -> float:
        return float(np.mean(self.collision_free)) if len(self) else 0.0

    def needle_axes(self) -> np.ndarray:
        """Needle direction (tool-frame z-axis) per sample, (N, 3)."""
        return self.tip_rotation[:, :, 2]


def _sample_chunk(scene: Scene, model: RobotModel, seed: int, chunk_index: int,
                  count: int) -> WorkspaceSamples:
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed,
                                                       spawn_key=(chunk_index,)))
    Q = np.zeros((count, 7))
    Q[:, :6] = rng.uniform(model.limits.lower[:6], model.limits.upper[:6],
                           size=(count, 6))
    origins, rotations = batch_fk_frames(model.dh, Q)
    R_mount = scene.mount.rotation
    tip_pos = scene.mount.position + origins[:, 8] @ R_mount.T
    tip_rot = np.einsum("ij,bjk->bik", R_mount, rotations[:, 8])
    free = collision_free_mask(scene, model.body, model.dh, Q)
    return WorkspaceSamples(Q, tip_pos, tip_rot, free)


def sample_workspace(scene: Scene, model: RobotModel, n: int, seed: int = 0,
                     workers: int = 0) -> WorkspaceSamples:
    """Draw n i.i.d. uniform configurations and evaluate pose + collision.

    Identical (n, seed) gives bit-identical results regardless of workers.
    """
    if n < 1:
        raise InvalidArgumentError("sample count must be >= 1")
    chunks = [(c, min(_CHUNK, n - c * _CHUNK))
              for c in range((n + _CHUNK - 1) // _CHUNK)]
    if workers and workers > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(
                lambda item: _sample_chunk(scene, model, seed, item[0], item[1]),
                chunks))
    else:
        parts = [_sample_chunk(scene, model, seed, c, m) for c, m in chunks]
    return WorkspaceSamples(
        np.concatenate([p.q for p in parts]),
        np.concatenate([p.tip_position for p in parts]),
        np.concatenate([p.tip_rotation for p in parts]),
        np.concatenate([p.collision_free for p in parts]))


@dataclass(frozen=True)
class Heatmap:
    targets: np.ndarray     # (M, 3)
    counts: np.ndarray      # (M,) int
    radius: float
    percentage: np.ndarray  # (M,) of max count

    @property
    def max_count(self) -> int:
        return int(self.counts.max()) if self.counts.size else 0


def bin_reachability(samples: WorkspaceSamples, targets,
                     radius: float = DEFAULT_RADIUS_M) -> Heatmap:
    """Count collision-free tip positions within radius of each target.

    Percentages are normalized by the most-populated target (all zero when
    nothing is reachable).
    """
    targets = np.asarray(targets, dtype=float)
    if targets.ndim != 2 or targets.shape[1] != 3 or targets.shape[0] == 0:
        raise InvalidArgumentError("targets must be a nonempty (M, 3) array")
    if radius <= 0:
        raise InvalidArgumentError("radius must be positive")
    free_positions = samples.tip_position[samples.collision_free]
    if free_positions.shape[0] == 0:
        counts = np.zeros(targets.shape[0], dtype=np.int64)
    else:
        tree = cKDTree(free_positions)
        counts = np.asarray(tree.query_ball_point(targets, radius,
                                                  return_length=True),
                            dtype=np.int64)
    max_count = counts.max() if counts.size else 0
    if max_count > 0:
        percentage = 100.0 * counts / float(max_count)
    else:
        percentage = np.zeros_like(counts, dtype=float)
    return Heatmap(targets, counts, float(radius), percentage)


@dataclass(frozen=True)
class ApproachCone:
    directions: np.ndarray          # (K, 3) unit needle axes
    mean_direction: np.ndarray | None
    half_angle_rad: float | None

    @property
    def empty(self) -> bool:
        return self.directions.shape[0] == 0


def approach_cones(samples: WorkspaceSamples, target,
                   radius: float = DEFAULT_RADIUS_M) -> ApproachCone:
    """Needle approach directions of collision-free records near a target.

    The cone half-angle is the maximum angle from the mean direction; absent
    when no record reaches the target.
    """
    target = np.asarray(target, dtype=float).reshape(3)
    free = samples.collision_free
    d2 = np.sum((samples.tip_position[free] - target) ** 2, axis=1)
    axes = samples.needle_axes()[free][d2 <= radius * radius]
    if axes.shape[0] == 0:
        return ApproachCone(np.zeros((0, 3)), None, None)
    mean = axes.sum(axis=0)
    norm = np.linalg.norm(mean)
    if norm < 1e-12:
        # Antipodal direction set; fall back to the first axis as reference.
        mean = axes[0]
        norm = 1.0
    mean = mean / norm
    cosines = np.clip(axes @ mean, -1.0, 1.0)
    half_angle = float(np.max(np.arccos(cosines)))
    return ApproachCone(axes, mean, half_angle)


def export_heatmap(heatmap: Heatmap, path: str | Path) -> Path:
    """Write the heat map as CSV (x, y, z, count, percentage), one target per row.

    Output is deterministic: fixed row order and fixed float formatting, so
    re-exporting the same heat map reproduces the file byte for byte.
    """
    path = Path(path)
    lines = ["x,y,z,count,percentage"]
    for i in range(heatmap.targets.shape[0]):
        x, y, z = heatmap.targets[i]
        lines.append(f"{x:.10g},{y:.10g},{z:.10g},{int(heatmap.counts[i])},"
                     f"{heatmap.percentage[i]:.6g}")
    path.write_text("\n".join(lines) + "\n")
    return path


def load_targets(path: str | Path) -> np.ndarray:
    """Read a vertex list: one 'x y z' (or comma-separated) triple per line."""
    rows = []
    for raw in Path(path).read_text().splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.replace(",", " ").split()
        if len(parts) != 3:
            raise InvalidArgumentError(f"bad target line: {raw!r}")
        rows.append([float(v) for v in parts])
    if not rows:
        raise InvalidArgumentError(f"no targets in {path}")
    return np.asarray(rows, dtype=float)
