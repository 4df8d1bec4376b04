"""Desk-scale digital twin of a 7-DoF in-bore needle-placement arm."""

from .geometry import InvalidArgumentError, Pose
from .kinematics import (DHRow, DHTable, IkParams, IkResult, JointLimitError,
                         JointLimits, dh_transform, forward_kinematics, ik_dls,
                         jacobian)
from .model import RobotModel, default_model, load_model
from .transmission import (EncoderSpec, MixingMatrix, actuators_to_joints,
                           joints_to_actuators, quantize_actuator)

__all__ = [
    "DHRow", "DHTable", "EncoderSpec", "IkParams", "IkResult",
    "InvalidArgumentError", "JointLimitError", "JointLimits", "MixingMatrix",
    "Pose", "RobotModel", "actuators_to_joints", "default_model",
    "dh_transform", "forward_kinematics", "ik_dls", "jacobian",
    "joints_to_actuators", "load_model", "quantize_actuator",
]

__version__ = "0.1.0"
