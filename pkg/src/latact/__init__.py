"""Learned latent actions for low-DoF teleoperation of planar redundant arms."""

from .arm import (
    ArmGeometry,
    EePose,
    JointState,
    JointVelocityAction,
    forward_kinematics,
    jacobian,
    rollout,
    step,
)

__all__ = [
    "ArmGeometry",
    "EePose",
    "JointState",
    "JointVelocityAction",
    "forward_kinematics",
    "jacobian",
    "rollout",
    "step",
]

__version__ = "0.1.0"
