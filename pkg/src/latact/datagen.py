"""Synthesis and persistence of the four demonstration datasets.

Each task (Sine, Rotate, Circle, Reach) is defined by an analytic
end-effector reference path. Trajectories are produced by converging a
damped-least-squares inverse-kinematics iteration onto each waypoint and
storing the joint-velocity finite differences as actions, so replaying the
actions through the Euler plant reproduces the stored states to float
rounding. Distinct trajectories are independent; they are merged in seed
order, so generation is deterministic for a given spec.
"""

from __future__ import annotations

import dataclasses
import enum
import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .arm import (
    TWO_PI,
    ArmGeometry,
    JointState,
    JointVelocityAction,
    fk_position,
    jacobian,
    wrap_angle,
)
from .errors import DimensionError, FormatError, GenerationError, NotFiniteError, VersionError

DATASET_MAGIC = b"LATACT-DS\0"
DATASET_VERSION = 1

# fraction of full extension beyond which waypoints are rejected
REACH_MARGIN = 0.98


class TaskKind(str, enum.Enum):
    SINE = "sine"
    ROTATE = "rotate"
    CIRCLE = "circle"
    REACH = "reach"


def default_geometry(kind: TaskKind) -> ArmGeometry:
    if kind is TaskKind.ROTATE:
        return ArmGeometry(arm_count=2, base_positions=((0.0, 0.0), (6.0, 0.0)))
    return ArmGeometry()


_INTENDED_LATENT = {
    TaskKind.SINE: 1,
    TaskKind.ROTATE: 1,
    TaskKind.CIRCLE: 2,
    TaskKind.REACH: 1,
}


@dataclass(frozen=True)
class TaskSpec:
    """Full description of one demonstration task.

    Geometric defaults keep every reference path inside the workspace of
    5-link unit-length arms; see the per-task builders below for how each
    parameter is used.
    """

    task_kind: TaskKind
    geometry: ArmGeometry
    latent_dim_intended: int
    target_pair_count: int = 10000
    rng_seed: int = 0
    trajectory_length: int = 50
    # sine: ee follows y = A * sin(2*pi*x / wavelength) over x_span; the
    # defaults put ~1.7 periods inside the span so that positions alias in
    # action space and only state-conditioned decoders can tell them apart
    sine_amplitude: float = 0.6
    sine_wavelength: float = 2.0
    sine_x_span: tuple[float, float] = (1.3, 4.7)
    # circle: ee moves along/between circles around circle_center
    circle_center: tuple[float, float] = (0.0, 0.0)
    circle_radius_range: tuple[float, float] = (2.0, 4.0)
    # rotate: two grippers hold a rigid box centered on a sampled pivot,
    # last links along the box axis (so each wrist sits on the pivot)
    rotate_pivot_box: tuple[float, float, float, float] = (2.5, 0.3, 3.5, 1.3)
    rotate_box_length: float = 2.0
    # reach: fixed start, goal sampled across a rectangle, style = which side
    reach_start_ee: tuple[float, float] = (3.2, -0.8)
    reach_goal_region: tuple[float, float, float, float] = (1.5, 1.5, 3.5, 2.5)

    def __post_init__(self):
        if self.target_pair_count <= 0:
            raise ValueError("target_pair_count must be positive")
        if self.trajectory_length <= 0:
            raise ValueError("trajectory_length must be positive")
        if self.latent_dim_intended < 1:
            raise ValueError("latent_dim_intended must be >= 1")
        if self.sine_amplitude < 0 or self.sine_wavelength <= 0:
            raise ValueError("sine parameters must be positive (amplitude may be 0)")
        if self.circle_radius_range[0] <= 0 or self.circle_radius_range[1] <= self.circle_radius_range[0]:
            raise ValueError("circle_radius_range must be an increasing positive pair")
        if self.rotate_box_length <= 0:
            raise ValueError("rotate_box_length must be positive")
        if self.task_kind is TaskKind.ROTATE and self.geometry.arm_count != 2:
            raise ValueError("rotate task needs a two-arm geometry")

    @classmethod
    def defaults(cls, kind: TaskKind | str, seed: int = 0, **overrides) -> "TaskSpec":
        kind = TaskKind(kind)
        kwargs = dict(
            task_kind=kind,
            geometry=default_geometry(kind),
            latent_dim_intended=_INTENDED_LATENT[kind],
            rng_seed=seed,
        )
        kwargs.update(overrides)
        return cls(**kwargs)

    def to_json_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["task_kind"] = self.task_kind.value
        d["geometry"] = {
            "arm_count": self.geometry.arm_count,
            "joints_per_arm": self.geometry.joints_per_arm,
            "link_length": self.geometry.link_length,
            "base_positions": [list(b) for b in self.geometry.base_positions],
            "dt": self.geometry.dt,
        }
        return d

    @classmethod
    def from_json_dict(cls, d: dict) -> "TaskSpec":
        d = dict(d)
        g = d.pop("geometry")
        geometry = ArmGeometry(
            arm_count=int(g["arm_count"]),
            joints_per_arm=int(g["joints_per_arm"]),
            link_length=float(g["link_length"]),
            base_positions=tuple(tuple(float(x) for x in b) for b in g["base_positions"]),
            dt=float(g["dt"]),
        )
        kind = TaskKind(d.pop("task_kind"))
        tuple_fields = {
            "sine_x_span": 2,
            "circle_center": 2,
            "circle_radius_range": 2,
            "rotate_pivot_box": 4,
            "reach_start_ee": 2,
            "reach_goal_region": 4,
        }
        for name in tuple_fields:
            if name in d:
                d[name] = tuple(float(x) for x in d[name])
        return cls(task_kind=kind, geometry=geometry, **d)


@dataclass
class DemoDataset:
    """Ordered state-action pairs plus trajectory segmentation.

    ``states``/``actions`` have shape (count, n); ``traj_offsets`` is a CSR
    style index array of length n_traj+1 whose consecutive entries delimit
    trajectories.
    """

    states: np.ndarray
    actions: np.ndarray
    spec: TaskSpec
    traj_offsets: np.ndarray

    def __post_init__(self):
        self.states = np.ascontiguousarray(self.states, dtype=np.float64)
        self.actions = np.ascontiguousarray(self.actions, dtype=np.float64)
        self.traj_offsets = np.asarray(self.traj_offsets, dtype=np.uint32)
        n = self.spec.geometry.n
        if self.states.shape != self.actions.shape or self.states.shape[1] != n:
            raise DimensionError(
                f"states {self.states.shape} / actions {self.actions.shape} "
                f"inconsistent with geometry n={n}"
            )
        if not np.all(np.isfinite(self.actions)) or not np.all(np.isfinite(self.states)):
            raise NotFiniteError("dataset contains non-finite values")
        if self.traj_offsets[0] != 0 or self.traj_offsets[-1] != len(self.states):
            raise FormatError("trajectory offsets must start at 0 and end at the pair count")

    def __len__(self) -> int:
        return self.states.shape[0]

    @property
    def n_trajectories(self) -> int:
        return len(self.traj_offsets) - 1

    def trajectory(self, i: int) -> tuple[np.ndarray, np.ndarray]:
        lo, hi = int(self.traj_offsets[i]), int(self.traj_offsets[i + 1])
        return self.states[lo:hi], self.actions[lo:hi]

    def pair(self, i: int) -> tuple[JointState, JointVelocityAction]:
        return JointState(self.states[i]), JointVelocityAction(self.actions[i])

    def median_state(self) -> np.ndarray:
        return np.median(self.states, axis=0)

    def replay_error(self) -> float:
        """Max |replayed - stored| over all in-trajectory transitions."""
        dt = self.spec.geometry.dt
        worst = 0.0
        for i in range(self.n_trajectories):
            s, a = self.trajectory(i)
            replay = s[0].copy()
            for t in range(len(s) - 1):
                replay = replay + a[t] * dt
                worst = max(worst, float(np.max(np.abs(replay - s[t + 1]))))
        return worst

    def split_trajectories(self, test_fraction: float, seed: int = 0):
        """Hold out whole trajectories; returns (train_ds, test_ds)."""
        if not 0 < test_fraction < 1:
            raise ValueError("test_fraction must be in (0, 1)")
        rng = np.random.default_rng(seed)
        order = rng.permutation(self.n_trajectories)
        n_test = max(1, int(round(test_fraction * self.n_trajectories)))
        test_ids = set(order[:n_test].tolist())
        return self._subset([i for i in range(self.n_trajectories) if i not in test_ids]), self._subset(
            sorted(test_ids)
        )

    def _subset(self, traj_ids) -> "DemoDataset":
        states, actions, offsets = [], [], [0]
        for i in traj_ids:
            s, a = self.trajectory(i)
            states.append(s)
            actions.append(a)
            offsets.append(offsets[-1] + len(s))
        return DemoDataset(
            np.concatenate(states), np.concatenate(actions), self.spec, np.array(offsets)
        )


# ---------------------------------------------------------------------------
# resolved-rate control
# ---------------------------------------------------------------------------


def tracking_controller(
    geometry: ArmGeometry,
    state: JointState,
    ee_target: np.ndarray,
    arm_index: int = 0,
    damping: float = 0.1,
    gain: float = 0.5,
) -> JointVelocityAction:
    """Damped least-squares resolved-rate action toward an ee position target.

    a = J^T (J J^T + damping^2 I)^-1 * gain * (target - ee) / dt for the
    commanded arm; joints of any other arm get zero velocity. Damping keeps
    singular configurations finite, so this never throws for reachable or
    unreachable targets alike.
    """
    target = np.asarray(ee_target, dtype=float)
    if target.shape != (2,) or not np.all(np.isfinite(target)):
        raise NotFiniteError(f"ee_target must be a finite 2-vector, got {ee_target!r}")
    state.require_n(geometry)
    sl = geometry.joint_slice(arm_index)
    angles = state.angles[sl]
    err = target - fk_position(geometry, angles, arm_index)
    J = jacobian(geometry, state, arm_index)
    core = np.linalg.solve(J @ J.T + damping**2 * np.eye(2), gain * err / geometry.dt)
    velocities = np.zeros(geometry.n)
    velocities[sl] = J.T @ core
    return JointVelocityAction(velocities)


def _dls_delta(geometry, angles, arm_index, pos_target, ori_target, damping, rest=None):
    """One damped-least-squares IK increment for a single arm.

    Damping shrinks with the residual so the iteration is stable far from
    the target yet converges past weakly-actuated directions near it. When
    a rest posture is given, redundancy is resolved by pulling the
    nullspace component toward it, which makes the converged posture a
    function of the target alone (no path dependence between
    trajectories).
    """
    err_pos = pos_target - fk_position(geometry, angles, arm_index)
    Jp = _arm_jacobian(geometry, angles)
    if ori_target is None:
        J, err = Jp, err_pos
    else:
        J = np.vstack([Jp, np.ones((1, len(angles)))])
        err = np.append(err_pos, ori_target - np.sum(angles))
    worst = float(np.max(np.abs(err)))
    lam = min(damping, max(worst, 1e-6))
    core = np.linalg.solve(J @ J.T + lam**2 * np.eye(J.shape[0]), err)
    delta = J.T @ core
    null_step = 0.0
    if rest is not None:
        pinv = np.linalg.pinv(J)
        null_delta = 0.5 * ((np.eye(len(angles)) - pinv @ J) @ (rest - angles))
        delta = delta + null_delta
        null_step = float(np.max(np.abs(null_delta)))
    return delta, max(worst, null_step)


def _arm_jacobian(geometry, angles):
    cum = np.cumsum(angles)
    l = geometry.link_length
    sin_tail = np.cumsum((l * np.sin(cum))[::-1])[::-1]
    cos_tail = np.cumsum((l * np.cos(cum))[::-1])[::-1]
    return np.vstack([-sin_tail, cos_tail])


def _converge_ik(
    geometry,
    q,
    targets,
    damping=0.05,
    tol=1e-11,
    max_iters=400,
    where="",
    rests=None,
):
    """Iterate damped-LS updates until all per-arm targets are met.

    ``targets`` maps arm_index -> (position, orientation-or-None); ``rests``
    optionally maps arm_index -> rest posture for nullspace resolution
    (convergence then also requires the nullspace pull to settle). Raises
    GenerationError when the iteration stalls (target effectively out of
    reach for the current posture).
    """
    q = q.copy()
    for _ in range(max_iters):
        worst = 0.0
        for arm_index, (pos, ori) in targets.items():
            sl = geometry.joint_slice(arm_index)
            rest = None if rests is None else rests.get(arm_index)
            delta, err = _dls_delta(geometry, q[sl], arm_index, pos, ori, damping, rest=rest)
            q[sl] += delta
            worst = max(worst, err)
        if worst < tol:
            return q
    raise GenerationError(f"IK failed to converge {where} (residual {worst:.3g})")


def _check_reachable(geometry, point, arm_index, where):
    dist = float(np.linalg.norm(np.asarray(point) - geometry.base(arm_index)))
    if dist > REACH_MARGIN * geometry.reach:
        raise GenerationError(
            f"waypoint {where} at {tuple(np.round(point, 3))} is outside the "
            f"workspace radius {geometry.reach:.2f} of arm {arm_index}"
        )


def _arc_posture(geometry, target, arm_index):
    """Deterministic elbow-up initial guess: an equal-bend arc whose chord
    meets the target direction and distance."""
    base = geometry.base(arm_index)
    delta = np.asarray(target, dtype=float) - base
    alpha = np.arctan2(delta[1], delta[0])
    J = geometry.joints_per_arm
    r = min(float(np.linalg.norm(delta)) / geometry.reach, 0.999)

    def chord_ratio(phi):
        if phi < 1e-9:
            return 1.0
        return abs(np.sin(J * phi / 2) / (J * np.sin(phi / 2)))

    lo, hi = 0.0, 2 * np.pi / J * 0.999
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if chord_ratio(mid) > r:
            lo = mid
        else:
            hi = mid
    phi = 0.5 * (lo + hi)
    q = np.full(J, -phi)
    q[0] = alpha + (J - 1) * phi / 2
    return q


# ---------------------------------------------------------------------------
# task reference paths
# ---------------------------------------------------------------------------


def _speed_profile(rng, T, base_lo, base_hi, jitter=0.0):
    """Per-trajectory signed speed profile: smooth drift plus optional
    per-step jitter (a wide, position-independent speed spread keeps the
    speed axis unpredictable from the action direction alone)."""
    direction = 1.0 if rng.random() < 0.5 else -1.0
    base = rng.uniform(base_lo, base_hi)
    cycles = rng.uniform(0.5, 1.5)
    phase = rng.uniform(0, 2 * np.pi)
    t = np.arange(T)
    profile = direction * base * (0.8 + 0.2 * np.sin(2 * np.pi * cycles * t / T + phase))
    if jitter > 0:
        profile = profile * rng.uniform(1.0 - jitter, 1.0 + jitter, size=T)
    return profile


def _sine_curve(spec):
    A, lam = spec.sine_amplitude, spec.sine_wavelength
    k = 2 * np.pi / lam

    def y(x):
        return A * np.sin(k * x)

    def slope(x):
        return A * k * np.cos(k * x)

    return y, slope


def _sine_waypoints(spec, rng, T):
    y, slope = _sine_curve(spec)
    lo, hi = spec.sine_x_span
    x = rng.uniform(lo, hi)
    speeds = _speed_profile(rng, T, 0.1, 1.0, jitter=0.3)
    direction = 1.0
    dt = spec.geometry.dt
    xs = [x]
    for t in range(T):
        dx = direction * speeds[t] * dt / np.hypot(1.0, slope(x))
        nx = x + dx
        if nx < lo or nx > hi:
            direction = -direction
            nx = x + direction * abs(dx) * np.sign(speeds[t])
            nx = min(max(nx, lo), hi)
        x = nx
        xs.append(x)
    pts = np.column_stack([xs, y(np.asarray(xs))])
    return {0: [(p, None) for p in pts]}


CIRCLE_ARC = (0.35, np.pi - 0.35)  # keep an angular margin so postures stay
# on one smooth elbow branch around the arc


def _circle_waypoints(spec, rng, T):
    cx, cy = spec.circle_center
    r_lo, r_hi = spec.circle_radius_range
    r = rng.uniform(r_lo + 0.2, r_hi - 0.2)
    a_lo, a_hi = CIRCLE_ARC
    alpha = rng.uniform(a_lo + 0.1, a_hi - 0.1)
    v_tan = rng.uniform(-0.8, 0.8) * (0.7 + 0.3 * np.sin(
        2 * np.pi * rng.uniform(0.5, 1.5) * np.arange(T) / T + rng.uniform(0, 2 * np.pi)))
    v_rad = rng.uniform(-0.45, 0.45) * (0.7 + 0.3 * np.sin(
        2 * np.pi * rng.uniform(0.5, 1.5) * np.arange(T) / T + rng.uniform(0, 2 * np.pi)))
    rad_dir = 1.0
    tan_dir = 1.0
    dt = spec.geometry.dt
    pts = [np.array([cx + r * np.cos(alpha), cy + r * np.sin(alpha)])]
    for t in range(T):
        nr = r + rad_dir * v_rad[t] * dt
        if nr < r_lo or nr > r_hi:
            rad_dir = -rad_dir
            nr = r + rad_dir * v_rad[t] * dt
        r = min(max(nr, r_lo), r_hi)
        na = alpha + tan_dir * v_tan[t] * dt / r
        if na < a_lo or na > a_hi:
            tan_dir = -tan_dir
            na = alpha + tan_dir * v_tan[t] * dt / r
        alpha = min(max(na, a_lo), a_hi)
        pts.append(np.array([cx + r * np.cos(alpha), cy + r * np.sin(alpha)]))
    return {0: [(p, None) for p in pts]}


def _rotate_waypoints(spec, rng, T):
    x0, y0, x1, y1 = spec.rotate_pivot_box
    pivot = np.array([rng.uniform(x0, x1), rng.uniform(y0, y1)])
    theta0 = rng.uniform(-0.3, 0.3)
    omegas = _speed_profile(rng, T, 0.25, 0.6)
    half = 0.5 * spec.rotate_box_length
    theta = theta0
    direction = 1.0
    thetas = [theta]
    for t in range(T):
        nt = theta + direction * omegas[t] * spec.geometry.dt
        if abs(nt - theta0) > 1.0:
            direction = -direction
            nt = theta + direction * omegas[t] * spec.geometry.dt
        theta = nt
        thetas.append(theta)
    # gripper orientations point along the box axis: the left arm's last link
    # runs pivot-ward to the left end (theta + pi), the right arm's to the
    # right end (theta); with box_length = 2 * link_length both wrists ride
    # on the pivot itself, which keeps every rotation angle well conditioned
    out = {0: [], 1: []}
    for theta in thetas:
        u = np.array([np.cos(theta), np.sin(theta)])
        out[0].append((pivot - half * u, theta + np.pi))
        out[1].append((pivot + half * u, theta))
    return out


def _reach_waypoints(spec, rng, T):
    gx0, gy0, gx1, gy1 = spec.reach_goal_region
    margin = 0.05
    style = rng.uniform(-1.0, 1.0)
    goal = np.array([
        0.5 * (gx0 + gx1) + style * (0.5 * (gx1 - gx0) - margin),
        rng.uniform(gy0 + margin, gy1 - margin),
    ])
    start = np.asarray(spec.reach_start_ee)
    # ease-in/out speed profile along the straight start->goal segment
    t = np.arange(T + 1) / T
    progress = 0.5 * (1 - np.cos(np.pi * t))
    pts = start[None, :] + progress[:, None] * (goal - start)[None, :]
    return {0: [(p, None) for p in pts]}


_WAYPOINT_BUILDERS = {
    TaskKind.SINE: _sine_waypoints,
    TaskKind.ROTATE: _rotate_waypoints,
    TaskKind.CIRCLE: _circle_waypoints,
    TaskKind.REACH: _reach_waypoints,
}


# ---------------------------------------------------------------------------
# generation
# ---------------------------------------------------------------------------


def rest_postures(spec: TaskSpec) -> dict[int, np.ndarray]:
    """One fixed rest posture per arm, anchored at the task's centroid.

    All IK in the task resolves redundancy toward these postures, so the
    joint state is a reproducible function of the task-space target no
    matter which trajectory visits it.
    """
    geometry = spec.geometry
    if spec.task_kind is TaskKind.SINE:
        anchors = {0: np.array([np.mean(spec.sine_x_span), 0.0])}
    elif spec.task_kind is TaskKind.CIRCLE:
        r_mid = float(np.mean(spec.circle_radius_range))
        mid_angle = float(np.mean(CIRCLE_ARC))
        c = np.asarray(spec.circle_center)
        anchors = {0: c + r_mid * np.array([np.cos(mid_angle), np.sin(mid_angle)])}
    elif spec.task_kind is TaskKind.REACH:
        gx0, gy0, gx1, gy1 = spec.reach_goal_region
        anchors = {0: np.array([(gx0 + gx1) / 2, (gy0 + gy1) / 2])}
    else:  # rotate: both arms anchor on the pivot box center
        x0, y0, x1, y1 = spec.rotate_pivot_box
        center = np.array([(x0 + x1) / 2, (y0 + y1) / 2])
        anchors = {i: center for i in range(geometry.arm_count)}
    return {
        arm: _arc_posture(geometry, anchor, arm) for arm, anchor in anchors.items()
    }


def generate(spec: TaskSpec) -> DemoDataset:
    """Synthesize a demonstration dataset for the task.

    Trajectories are rolled out by converging damped-LS IK on each waypoint and
    recording (state, velocity) pairs; the stored states are the replayed
    Euler states, so the replay invariant holds by construction.
    """
    geometry = spec.geometry
    rng = np.random.default_rng(spec.rng_seed)
    builder = _WAYPOINT_BUILDERS[spec.task_kind]

    n_traj = int(np.ceil(spec.target_pair_count / spec.trajectory_length))
    all_states, all_actions, offsets = [], [], [0]
    remaining = spec.target_pair_count

    rests = rest_postures(spec)
    reach_start_q = _reach_start_state(spec, rests) if spec.task_kind is TaskKind.REACH else None

    for i in range(n_traj):
        T = min(spec.trajectory_length, remaining)
        waypoints = builder(spec, rng, spec.trajectory_length)
        for arm_index, wps in waypoints.items():
            for t, (pos, _) in enumerate(wps):
                _check_reachable(geometry, pos, arm_index, f"(trajectory {i}, step {t})")
        states, actions = _roll_trajectory(spec, waypoints, T, rests, reach_start_q)
        all_states.append(states)
        all_actions.append(actions)
        offsets.append(offsets[-1] + len(states))
        remaining -= T

    return DemoDataset(
        np.concatenate(all_states),
        np.concatenate(all_actions),
        spec,
        np.asarray(offsets),
    )


def _reach_start_state(spec, rests):
    geometry = spec.geometry
    start = np.asarray(spec.reach_start_ee)
    _check_reachable(geometry, start, 0, "(reach start)")
    q = _arc_posture(geometry, start, 0)
    return _converge_ik(geometry, q, {0: (start, None)}, where="(reach start)", rests=rests)


def _roll_trajectory(spec, waypoints, T, rests, start_q=None):
    geometry = spec.geometry
    dt = geometry.dt
    n = geometry.n

    # orientation targets are absolute angles; pick the 2*pi branch nearest
    # the starting posture so the unwrapped joint sum never winds
    branch = {arm_index: 0.0 for arm_index in waypoints}

    if start_q is None:
        q = np.zeros(n)
        first_targets = {}
        for arm_index, wps in waypoints.items():
            pos0, ori0 = wps[0]
            sl = geometry.joint_slice(arm_index)
            q[sl] = _arc_posture(geometry, pos0, arm_index)
            if ori0 is not None:
                branch[arm_index] = TWO_PI * round((float(np.sum(q[sl])) - ori0) / TWO_PI)
                ori0 = ori0 + branch[arm_index]
            first_targets[arm_index] = (pos0, ori0)
        q = _converge_ik(geometry, q, first_targets, where="(trajectory start)", rests=rests)
    else:
        q = start_q.copy()

    states = np.empty((T, n))
    actions = np.empty((T, n))
    s = q
    for t in range(T):
        targets = {}
        for arm_index, wps in waypoints.items():
            pos, ori = wps[t + 1]
            if ori is not None:
                ori = ori + branch[arm_index]
            targets[arm_index] = (pos, ori)
        q_next = _converge_ik(geometry, s, targets, where=f"(step {t})", rests=rests)
        a = (q_next - s) / dt
        states[t] = s
        actions[t] = a
        s = s + a * dt  # replayed state, not q_next: keeps replay bit-exact
    return states, actions


# ---------------------------------------------------------------------------
# task-level reference directions (used by alignment and metrics)
# ---------------------------------------------------------------------------


def canonical_axes(spec: TaskSpec, state: JointState) -> np.ndarray:
    """Task reference directions at a state, one unit 2-vector per latent dim.

    Sine: along-wave tangent (positive x sense). Circle: tangent then radial.
    Reach: left-to-right across the goal region. Rotate has no positional
    axis; orientation change carries its own sign (see metrics).
    """
    geometry = spec.geometry
    ee = fk_position(geometry, state.angles[geometry.joint_slice(0)], 0)
    if spec.task_kind is TaskKind.SINE:
        # the wave's progress direction: moving "right" along x is the
        # positive sense everywhere (the wave is a graph over x)
        return np.array([[1.0, 0.0]])
    if spec.task_kind is TaskKind.CIRCLE:
        radial = ee - np.asarray(spec.circle_center)
        nr = np.linalg.norm(radial)
        radial = radial / nr if nr > 1e-12 else np.array([1.0, 0.0])
        tangent = np.array([-radial[1], radial[0]])
        return np.vstack([tangent, radial])
    if spec.task_kind is TaskKind.REACH:
        return np.array([[1.0, 0.0]])
    raise ValueError(f"no positional canonical axes for task {spec.task_kind}")


def sine_progress(spec: TaskSpec, ee_position: np.ndarray) -> float:
    """Progress coordinate along the sine wave (its x parameter)."""
    return float(ee_position[0])


# ---------------------------------------------------------------------------
# persistence
# ---------------------------------------------------------------------------


def save(dataset: DemoDataset, path) -> None:
    """Write the self-describing binary container."""
    meta = json.dumps(dataset.spec.to_json_dict(), sort_keys=True, separators=(",", ":")).encode()
    n = dataset.spec.geometry.n
    with open(path, "wb") as f:
        f.write(DATASET_MAGIC)
        f.write(struct.pack("<H", DATASET_VERSION))
        f.write(struct.pack("<I", len(meta)))
        f.write(meta)
        f.write(struct.pack("<III", len(dataset), n, dataset.n_trajectories))
        matrix = np.hstack([dataset.states, dataset.actions]).astype("<f8")
        f.write(matrix.tobytes())
        f.write(dataset.traj_offsets.astype("<u4").tobytes())


def _read_exact(f, count, what):
    buf = f.read(count)
    if len(buf) != count:
        raise FormatError(f"truncated dataset file while reading {what}")
    return buf


def load(path, expect_n: int | None = None) -> DemoDataset:
    """Read a dataset container; inverse of :func:`save`."""
    with open(path, "rb") as f:
        magic = f.read(len(DATASET_MAGIC))
        if magic != DATASET_MAGIC:
            raise FormatError(f"{path} is not a latact dataset (bad magic {magic!r})")
        (version,) = struct.unpack("<H", _read_exact(f, 2, "version"))
        if version != DATASET_VERSION:
            raise VersionError(f"unsupported dataset version {version}")
        (meta_len,) = struct.unpack("<I", _read_exact(f, 4, "metadata length"))
        spec = TaskSpec.from_json_dict(json.loads(_read_exact(f, meta_len, "metadata")))
        count, n, n_traj = struct.unpack("<III", _read_exact(f, 12, "dimensions"))
        if n != spec.geometry.n:
            raise FormatError(f"matrix width {n} inconsistent with metadata n={spec.geometry.n}")
        if expect_n is not None and n != expect_n:
            raise DimensionError(f"dataset has n={n}, expected n={expect_n}")
        matrix = np.frombuffer(
            _read_exact(f, count * 2 * n * 8, "pair matrix"), dtype="<f8"
        ).reshape(count, 2 * n)
        offsets = np.frombuffer(
            _read_exact(f, (n_traj + 1) * 4, "trajectory offsets"), dtype="<u4"
        )
        if f.read(1):
            raise FormatError("trailing bytes after dataset payload")
    return DemoDataset(matrix[:, :n].copy(), matrix[:, n:].copy(), spec, offsets.copy())


def export_jsonl(dataset: DemoDataset, path) -> None:
    """One {"s": [...], "a": [...], "traj": i} object per line."""
    traj_of = np.zeros(len(dataset), dtype=int)
    for i in range(dataset.n_trajectories):
        traj_of[dataset.traj_offsets[i]:dataset.traj_offsets[i + 1]] = i
    with open(path, "w") as f:
        for i in range(len(dataset)):
            f.write(
                json.dumps(
                    {
                        "s": dataset.states[i].tolist(),
                        "a": dataset.actions[i].tolist(),
                        "traj": int(traj_of[i]),
                    }
                )
                + "\n"
            )
