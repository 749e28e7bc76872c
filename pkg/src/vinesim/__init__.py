"""Desk-scale model of an externally tip-steered soft growing robot.

Modules cover steering-device kinematics, tip statics, dead-reckoning
localization, pipe-network geometry, the growth/steering simulator, and the
teleoperation wire protocol.  The `vinesim` CLI exposes the scenario runner
and the teleop service.
"""

from . import cli, dynamics, environment, kinematics, localization, quat, simulator, teleop
from .dynamics import BodyState, SoftJointParams, TipInertia, blocked_tendon_force
from .environment import PipeNetwork, build_course, centerline, preset_course
from .kinematics import (
    DeviceGeometry,
    HomogeneousTransform,
    RotationAngles,
    TendonState,
    effective_radius,
    joint_to_tendon,
    rot_zyx,
    tendon_to_joint,
    tip_position,
    workspace_surface,
)
from .localization import (
    EncoderSample,
    SensorFrame,
    TrajectoryEstimate,
    dead_reckon,
    fuse_orientation,
    run_pipeline,
    tracking_error,
)
from .simulator import MotorCommand, NoiseModel, SimConfig, Simulator, run_scenario
from .teleop import CommandMessage, TelemetryMessage, parse_command, serialize_telemetry

__all__ = [
    "kinematics", "dynamics", "localization", "environment", "simulator", "teleop",
    "quat", "cli",
    "DeviceGeometry", "RotationAngles", "TendonState", "HomogeneousTransform",
    "rot_zyx", "tip_position", "effective_radius", "tendon_to_joint",
    "joint_to_tendon", "workspace_surface",
    "TipInertia", "SoftJointParams", "BodyState", "blocked_tendon_force",
    "SensorFrame", "EncoderSample", "TrajectoryEstimate", "fuse_orientation",
    "dead_reckon", "run_pipeline", "tracking_error",
    "PipeNetwork", "build_course", "centerline", "preset_course",
    "Simulator", "SimConfig", "MotorCommand", "NoiseModel", "run_scenario",
    "CommandMessage", "TelemetryMessage", "parse_command", "serialize_telemetry",
]
__version__ = "0.1.0"
