"""Planar one- and two-arm kinematics and discrete-time transition dynamics.

All arms are chains of equal-length links with revolute joints. States are
joint angle vectors (unwrapped, accumulating freely), actions are joint
velocity vectors, and the plant integrates with explicit Euler:
``s_{t+1} = s_t + a_t * dt``. Everything here is a pure function of its
inputs, so any number of evaluators may call concurrently.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import DimensionError, NotFiniteError, RolloutAborted

TWO_PI = 2.0 * np.pi


def wrap_angle(theta: float) -> float:
    """Wrap an angle to (-pi, pi]."""
    w = np.remainder(theta, TWO_PI)
    if w > np.pi:
        w -= TWO_PI
    return float(w)


@dataclass(frozen=True)
class ArmGeometry:
    """Link layout of the simulated plant.

    ``arm_count`` is 1 or 2; each arm has ``joints_per_arm`` revolute joints
    and equal links of ``link_length`` meters rooted at its base position.
    The total joint dimension is ``n = arm_count * joints_per_arm``, laid out
    as arm 0's joints followed by arm 1's.
    """

    arm_count: int = 1
    joints_per_arm: int = 5
    link_length: float = 1.0
    base_positions: tuple[tuple[float, float], ...] = ((0.0, 0.0),)
    dt: float = 0.1

    def __post_init__(self):
        if self.arm_count not in (1, 2):
            raise ValueError(f"arm_count must be 1 or 2, got {self.arm_count}")
        if self.joints_per_arm < 1:
            raise ValueError("joints_per_arm must be >= 1")
        if not self.link_length > 0:
            raise ValueError("link_length must be positive")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if len(self.base_positions) != self.arm_count:
            raise ValueError(
                f"need {self.arm_count} base positions, got {len(self.base_positions)}"
            )

    @property
    def n(self) -> int:
        """Total joint dimension across arms."""
        return self.arm_count * self.joints_per_arm

    @property
    def reach(self) -> float:
        """Workspace radius of a single arm about its base."""
        return self.joints_per_arm * self.link_length

    def joint_slice(self, arm_index: int) -> slice:
        if not 0 <= arm_index < self.arm_count:
            raise DimensionError(f"arm_index {arm_index} out of range")
        lo = arm_index * self.joints_per_arm
        return slice(lo, lo + self.joints_per_arm)

    def base(self, arm_index: int) -> np.ndarray:
        return np.asarray(self.base_positions[arm_index], dtype=float)


@dataclass(frozen=True)
class JointState:
    """Joint angle vector (radians, unwrapped)."""

    angles: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.angles, dtype=float)
        if a.ndim != 1:
            raise DimensionError(f"angles must be a vector, got shape {a.shape}")
        if not np.all(np.isfinite(a)):
            raise NotFiniteError("joint angles must be finite")
        object.__setattr__(self, "angles", a)

    def require_n(self, geometry: ArmGeometry) -> None:
        if self.angles.shape[0] != geometry.n:
            raise DimensionError(
                f"state has {self.angles.shape[0]} joints, geometry expects {geometry.n}"
            )


@dataclass(frozen=True)
class JointVelocityAction:
    """Joint velocity command (rad/s).

    If ``cap`` is given, velocities are clamped per-joint to ``[-cap, cap]``
    at construction. Dataset replay uses uncapped actions.
    """

    velocities: np.ndarray
    cap: float | None = None

    def __post_init__(self):
        v = np.asarray(self.velocities, dtype=float)
        if v.ndim != 1:
            raise DimensionError(f"velocities must be a vector, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise NotFiniteError("joint velocities must be finite")
        if self.cap is not None:
            if not self.cap > 0:
                raise ValueError("cap must be positive")
            v = np.clip(v, -self.cap, self.cap)
        object.__setattr__(self, "velocities", v)

    def require_n(self, geometry: ArmGeometry) -> None:
        if self.velocities.shape[0] != geometry.n:
            raise DimensionError(
                f"action has {self.velocities.shape[0]} joints, geometry expects {geometry.n}"
            )


@dataclass(frozen=True)
class EePose:
    """End-effector pose of one arm: planar position plus summed-link angle."""

    position: np.ndarray
    orientation: float  # wrapped to (-pi, pi]
    arm_index: int = 0


def _arm_angles(geometry: ArmGeometry, state: JointState, arm_index: int) -> np.ndarray:
    state.require_n(geometry)
    return state.angles[geometry.joint_slice(arm_index)]


def fk_position(geometry: ArmGeometry, angles: np.ndarray, arm_index: int = 0) -> np.ndarray:
    """End-effector xy for one arm's joint angle vector (no wrapper types)."""
    cum = np.cumsum(angles)
    pos = geometry.base(arm_index).copy()
    pos[0] += geometry.link_length * np.sum(np.cos(cum))
    pos[1] += geometry.link_length * np.sum(np.sin(cum))
    return pos


def forward_kinematics(geometry: ArmGeometry, state: JointState, arm_index: int = 0) -> EePose:
    """Planar forward kinematics for the selected arm.

    Position is the base plus the sum of link vectors at cumulative joint
    angles; orientation is the total angle of the last link, wrapped.
    """
    angles = _arm_angles(geometry, state, arm_index)
    pos = fk_position(geometry, angles, arm_index)
    return EePose(position=pos, orientation=wrap_angle(float(np.sum(angles))), arm_index=arm_index)


def jacobian(geometry: ArmGeometry, state: JointState, arm_index: int = 0) -> np.ndarray:
    """2 x joints_per_arm Jacobian of ee position w.r.t. that arm's angles.

    Column k is (-sum_{j>=k} l*sin(cum_j), sum_{j>=k} l*cos(cum_j)).
    """
    angles = _arm_angles(geometry, state, arm_index)
    cum = np.cumsum(angles)
    l = geometry.link_length
    # reversed cumulative sums give the "all links at or after joint k" terms
    sin_tail = np.cumsum((l * np.sin(cum))[::-1])[::-1]
    cos_tail = np.cumsum((l * np.cos(cum))[::-1])[::-1]
    return np.vstack([-sin_tail, cos_tail])


def step(geometry: ArmGeometry, state: JointState, action: JointVelocityAction) -> JointState:
    """Explicit Euler transition: ``s + a * dt``."""
    state.require_n(geometry)
    action.require_n(geometry)
    return JointState(state.angles + action.velocities * geometry.dt)


def rollout(
    geometry: ArmGeometry,
    start: JointState,
    policy: Callable[[JointState], JointVelocityAction],
    horizon: int,
) -> list[JointState]:
    """Apply ``policy`` for ``horizon`` steps; returns horizon+1 states.

    A policy that raises NotFiniteError (or returns a non-finite action)
    aborts with RolloutAborted carrying the partial trajectory.
    """
    if horizon < 0:
        raise ValueError("horizon must be >= 0")
    states = [start]
    s = start
    for _ in range(horizon):
        try:
            a = policy(s)
            s = step(geometry, s, a)
        except NotFiniteError as exc:
            raise RolloutAborted(f"policy produced a non-finite action: {exc}", states) from exc
        states.append(s)
    return states
