"""Robot model file: DH table, joint limits, mixing matrix, encoder, cable, body.

The file format is YAML with a fixed schema (see data/robot.yaml, which ships
the default arm). All numeric constants live in the file; the loader only
validates shape and invariants, so a modified robot never requires code edits.
"""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

from .geometry import InvalidArgumentError
from .kinematics import FIXED, N_JOINTS, PRISMATIC, REVOLUTE, DHRow, DHTable, JointLimits
from .statics import CableMaterial, CableRun, cable_catalog
from .transmission import EncoderSpec, MixingMatrix

_JOINT_TYPES = {"prismatic": PRISMATIC, "revolute": REVOLUTE, "fixed": FIXED}


class ModelFormatError(ValueError):
    """The model file is missing fields or violates a schema invariant."""


@dataclass(frozen=True)
class BodyLink:
    """One collision capsule rigidly attached to a DH frame (local endpoints)."""

    name: str
    frame: int               # 1..8; capsule endpoints are in this frame
    a: np.ndarray
    b: np.ndarray
    radius: float
    in_bore: bool = False    # counted toward the frontal cross-section budget

    def __post_init__(self):
        object.__setattr__(self, "a", np.asarray(self.a, dtype=float).reshape(3))
        object.__setattr__(self, "b", np.asarray(self.b, dtype=float).reshape(3))
        if self.radius <= 0:
            raise ModelFormatError(f"link {self.name!r} radius must be positive")


@dataclass(frozen=True)
class RobotModel:
    name: str
    dh: DHTable
    limits: JointLimits
    mixing: MixingMatrix
    encoder: EncoderSpec
    cable_drive: CableRun
    body: tuple   # ordered BodyLink chain, proximal to distal

    @property
    def materials(self) -> dict[str, CableMaterial]:
        return cable_catalog()


def _require(mapping: dict, key: str, context: str):
    if key not in mapping:
        raise ModelFormatError(f"{context}: missing key {key!r}")
    return mapping[key]


def _floats(value, n: int, context: str) -> np.ndarray:
    arr = np.asarray(value, dtype=float)
    if arr.shape != (n,):
        raise ModelFormatError(f"{context}: expected {n} numbers")
    return arr


def load_model(path: str | Path | None = None) -> RobotModel:
    """Load a robot model file; None loads the shipped default."""
    if path is None:
        text = resources.files("borearm.data").joinpath("robot.yaml").read_text()
    else:
        path = Path(path)
        if not path.exists():
            raise ModelFormatError(f"model file not found: {path}")
        text = path.read_text()
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ModelFormatError(f"model file is not valid YAML: {exc}") from exc
    if not isinstance(doc, dict):
        raise ModelFormatError("model file must be a mapping")

    rows = []
    for i, entry in enumerate(_require(doc, "dh", "model")):
        context = f"dh row {i + 1}"
        joint = _require(entry, "joint", context)
        if joint not in _JOINT_TYPES:
            raise ModelFormatError(f"{context}: unknown joint type {joint!r}")
        rows.append(DHRow(_JOINT_TYPES[joint],
                          a=float(_require(entry, "a", context)),
                          alpha=float(_require(entry, "alpha", context)),
                          d_offset=float(_require(entry, "d", context)),
                          theta_offset=float(_require(entry, "theta", context))))
    try:
        dh = DHTable(tuple(rows))
    except InvalidArgumentError as exc:
        raise ModelFormatError(str(exc)) from exc

    lim = _require(doc, "joint_limits", "model")
    limits = JointLimits(_floats(_require(lim, "lower", "joint_limits"), N_JOINTS, "lower"),
                         _floats(_require(lim, "upper", "joint_limits"), N_JOINTS, "upper"))

    mix_rows = _require(doc, "mixing_matrix", "model")
    M = np.asarray(mix_rows, dtype=float)
    if M.shape != (N_JOINTS, N_JOINTS):
        raise ModelFormatError("mixing_matrix must be 7 rows of 7 numbers")
    mixing = MixingMatrix(M)

    enc = _require(doc, "encoder", "model")
    encoder = EncoderSpec(
        counts_per_motor_rev=int(_require(enc, "counts_per_motor_rev", "encoder")),
        gear_ratio=int(_require(enc, "gear_ratio", "encoder")),
        count_bits=int(enc.get("count_bits", 32)))

    cab = _require(doc, "cable_drive", "model")
    material_name = _require(cab, "material", "cable_drive")
    catalog = cable_catalog()
    if material_name not in catalog:
        raise ModelFormatError(f"cable_drive: unknown material {material_name!r}")
    cable_drive = CableRun(catalog[material_name],
                           free_length_m=float(_require(cab, "free_length_m", "cable_drive")),
                           cross_section_m2=float(_require(cab, "cross_section_m2", "cable_drive")),
                           pulley_radius_m=float(_require(cab, "pulley_radius_m", "cable_drive")))

    body = []
    for entry in _require(doc, "body", "model"):
        context = f"body link {entry.get('name', '?')}"
        frame = int(_require(entry, "frame", context))
        if not 1 <= frame <= len(dh):
            raise ModelFormatError(f"{context}: frame {frame} out of range")
        body.append(BodyLink(name=str(_require(entry, "name", context)),
                             frame=frame,
                             a=_floats(_require(entry, "a", context), 3, context),
                             b=_floats(_require(entry, "b", context), 3, context),
                             radius=float(_require(entry, "radius", context)),
                             in_bore=bool(entry.get("in_bore", False))))

    return RobotModel(name=str(doc.get("name", "unnamed robot")),
                      dh=dh, limits=limits, mixing=mixing, encoder=encoder,
                      cable_drive=cable_drive, body=tuple(body))


def default_model() -> RobotModel:
    return load_model(None)
