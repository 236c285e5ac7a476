"""Dependent measures for comparing latent-action embeddings.

Four families of measures, evaluated on held-out trajectories:

* accuracy — reconstruction MSE of intended vs decoded actions, reported
  raw and as a percentage of the PCA baseline on the identical test set;
* controllability — how close a greedy receding-horizon solver driving
  the plant through the learned decoder gets to goal states;
* consistency/scalability — R^2 of the best-fit line relating latent
  magnitude to signed task displacement across states;
* disentanglement (2-DoF tasks) — the angle between the end-effector
  directions the two latent axes induce;
* reach quality — final distance and path length when steering toward
  sampled goals in end-effector space.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .arm import ArmGeometry, JointState, fk_position
from .datagen import DemoDataset, TaskKind, TaskSpec, canonical_axes
from .models import TrainedModel, decode_batch, reconstruction_mse


@dataclass(frozen=True)
class MetricConfig:
    test_fraction: float = 0.2
    controllability_pairs: int = 1000
    horizon_cap: int = 100
    z_grid: int = 41  # per-axis cells for the greedy solver, one refinement
    consistency_states: int = 25
    consistency_grid: int = 21  # z samples in [-1, +1]
    reach_goals: int = 100
    rng_seed: int = 0

    def __post_init__(self):
        if not 0 < self.test_fraction < 1:
            raise ValueError("test_fraction must be in (0, 1)")
        if self.z_grid < 3 or self.consistency_grid < 3:
            raise ValueError("grids must have at least 3 points")


# ---------------------------------------------------------------------------
# accuracy
# ---------------------------------------------------------------------------


def accuracy(model: TrainedModel, test_set: DemoDataset, pca_mse: float | None = None):
    """Test MSE (raw action units) and, when a PCA baseline value is given,
    the normalized percentage. A zero PCA baseline flags the absolute value."""
    mse = reconstruction_mse(model, test_set.states, test_set.actions)
    if pca_mse is None:
        return mse, None
    if pca_mse <= 0:
        return mse, float("nan")
    return mse, 100.0 * mse / pca_mse


# ---------------------------------------------------------------------------
# greedy receding-horizon latent solver
# ---------------------------------------------------------------------------


def _z_candidates(d: int, resolution: int, center=None, half_width=1.0):
    axes = [np.linspace(-half_width, half_width, resolution)] * d
    if center is not None:
        axes = [np.clip(ax + c, -1.0, 1.0) for ax, c in zip(axes, center)]
    if d == 1:
        return axes[0][:, None]
    g = np.meshgrid(*axes, indexing="ij")
    return np.stack([x.ravel() for x in g], axis=1)


def _shoot_batch(model, geometry, start, objective, zs, horizon):
    """Roll every constant-z candidate over the full horizon in one batch.

    Returns (best objective along each path, step of the best approach). A
    path whose decode turns non-finite is frozen at its best value so far.
    """
    B = len(zs)
    states = np.repeat(start[None, :], B, axis=0)
    best = objective(states)
    best_step = np.zeros(B, dtype=int)
    active = np.ones(B, dtype=bool)
    for k in range(1, horizon + 1):
        actions = decode_batch(model, zs[active], states[active])
        finite = np.all(np.isfinite(actions), axis=1)
        if not np.all(finite):
            idx = np.flatnonzero(active)
            active[idx[~finite]] = False
            actions = actions[finite]
            if actions.size == 0:
                break
        idx = np.flatnonzero(active)
        states[idx] = states[idx] + actions * geometry.dt
        vals = objective(states[idx])
        improved = vals < best[idx]
        best[idx[improved]] = vals[improved]
        best_step[idx[improved]] = k
    return best, best_step


def solve_constant_latent(
    model, geometry: ArmGeometry, start: np.ndarray, objective, config: MetricConfig
):
    """Solve for the constant latent action minimizing the objective.

    Shooting search: every z on a dense grid over [-1,+1]^d is applied as a
    held input (decoded against the current state each step, as a joystick
    would be) and rolled over the horizon; the reported value is the best
    approach along the best path, with one grid refinement around the best
    cell. Finer grids contain every coarser candidate, so the achieved
    error is monotone non-increasing in resolution. Returns
    (best error, best z).
    """
    start = np.asarray(start, dtype=float)
    d = model.latent_dim
    coarse = _z_candidates(d, config.z_grid)
    best_vals, _ = _shoot_batch(model, geometry, start, objective, coarse, config.horizon_cap)
    k = int(np.argmin(best_vals))
    spacing = 2.0 / (config.z_grid - 1)
    fine = _z_candidates(d, config.z_grid, center=coarse[k], half_width=spacing)
    fine_vals, _ = _shoot_batch(model, geometry, start, objective, fine, config.horizon_cap)
    j = int(np.argmin(fine_vals))
    if fine_vals[j] < best_vals[k]:
        return float(fine_vals[j]), fine[j]
    return float(best_vals[k]), coarse[k]


def rollout_constant_z(model, geometry, start, objective, z, horizon):
    """Re-roll one constant-z path; returns states up to its best-approach
    step (inclusive of the start)."""
    state = np.asarray(start, dtype=float).copy()
    visited = [state.copy()]
    best = float(objective(state[None, :])[0])
    best_idx = 0
    for _ in range(horizon):
        action = decode_batch(model, z[None, :], state[None, :])[0]
        if not np.all(np.isfinite(action)):
            break
        state = state + action * geometry.dt
        visited.append(state.copy())
        val = float(objective(state[None, :])[0])
        if val < best:
            best = val
            best_idx = len(visited) - 1
    return visited[: best_idx + 1]


def controllability(
    model: TrainedModel,
    test_set: DemoDataset,
    config: MetricConfig,
    state_pairs: list[tuple[np.ndarray, np.ndarray]] | None = None,
) -> float:
    """Mean best ||s - goal|| over start/goal state pairs from the test set.

    A decoder that produces non-finite output scores that candidate at its
    best error so far (a failure, not a crash).
    """
    geometry = test_set.spec.geometry
    if state_pairs is None:
        state_pairs = sample_state_pairs(test_set, config.controllability_pairs, config.rng_seed)
    errors = []
    for s_start, s_goal in state_pairs:
        def objective(states, goal=s_goal):
            return np.linalg.norm(states - goal[None, :], axis=1)

        err, _ = solve_constant_latent(model, geometry, s_start, objective, config)
        errors.append(err)
    return float(np.mean(errors))


def sample_state_pairs(test_set: DemoDataset, count: int, seed: int, within_trajectory: bool = False):
    """Random start/goal state pairs from the test set.

    ``within_trajectory`` restricts both states to one trajectory; tasks
    whose trajectories carry an unshared latent context (Rotate's pivot)
    are only controllable within a trajectory."""
    rng = np.random.default_rng(seed)
    if not within_trajectory:
        idx = rng.integers(0, len(test_set), size=(count, 2))
        return [(test_set.states[i].copy(), test_set.states[j].copy()) for i, j in idx]
    pairs = []
    for _ in range(count):
        traj = int(rng.integers(0, test_set.n_trajectories))
        states, _ = test_set.trajectory(traj)
        i, j = rng.integers(0, len(states), size=2)
        pairs.append((states[i].copy(), states[j].copy()))
    return pairs


# ---------------------------------------------------------------------------
# consistency + scalability
# ---------------------------------------------------------------------------


def sample_task_states(test_set: DemoDataset, count: int) -> np.ndarray:
    """States sampled uniformly along one held-out demonstration trajectory."""
    states, _ = test_set.trajectory(0)
    idx = np.linspace(0, len(states) - 1, count).round().astype(int)
    return states[idx]


def _signed_displacement(spec: TaskSpec, state: np.ndarray, nxt: np.ndarray, axis_index: int) -> float:
    """Task metric d_M: magnitude times direction of one transition.

    Rotate uses the signed mean gripper-orientation change (the box's
    rotation); other tasks use the ee displacement magnitude signed by its
    projection on the task's canonical axis."""
    geometry = spec.geometry
    if spec.task_kind is TaskKind.ROTATE:
        deltas = [
            np.sum(nxt[geometry.joint_slice(i)]) - np.sum(state[geometry.joint_slice(i)])
            for i in range(geometry.arm_count)
        ]
        return float(np.mean(deltas))
    before = fk_position(geometry, state[geometry.joint_slice(0)], 0)
    after = fk_position(geometry, nxt[geometry.joint_slice(0)], 0)
    disp = after - before
    mag = float(np.linalg.norm(disp))
    if mag == 0.0:
        return 0.0
    axes = canonical_axes(spec, JointState(state))
    axis = axes[min(axis_index, len(axes) - 1)]
    return mag * float(np.sign(disp @ axis))


def _line_fit_r2(x: np.ndarray, y: np.ndarray) -> float:
    """R^2 of the least-squares line, clamped at 0; degenerate data flags 0."""
    if np.ptp(x) < 1e-12 or len(x) < 3:
        return 0.0
    coeffs = np.polyfit(x, y, 1)
    resid = y - np.polyval(coeffs, x)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    if ss_tot < 1e-18:
        return 0.0
    return max(0.0, 1.0 - float(np.sum(resid**2)) / ss_tot)


def consistency_scalability(model: TrainedModel, test_set: DemoDataset, config: MetricConfig) -> float:
    """R^2 of z vs signed displacement over a fixed z grid at task states.

    For d=2 each axis is swept separately with the other held at 0 and the
    per-axis R^2 values are averaged.
    """
    spec = test_set.spec
    geometry = spec.geometry
    states = sample_task_states(test_set, config.consistency_states)
    zs = np.linspace(-1.0, 1.0, config.consistency_grid)
    d = model.latent_dim
    r2s = []
    for axis in range(d):
        xs, ys = [], []
        for state in states:
            grid = np.zeros((len(zs), d))
            grid[:, axis] = zs
            actions = decode_batch(model, grid, state[None, :])
            nxts = state[None, :] + actions * geometry.dt
            for z, nxt in zip(zs, nxts):
                xs.append(z)
                ys.append(_signed_displacement(spec, state, nxt, axis))
        r2s.append(_line_fit_r2(np.asarray(xs), np.asarray(ys)))
    return float(np.mean(r2s))


# ---------------------------------------------------------------------------
# disentanglement (2-DoF latent spaces)
# ---------------------------------------------------------------------------


def disentanglement_angle(model: TrainedModel, test_set: DemoDataset, config: MetricConfig):
    """Mean +- SD angle (degrees) between the ee directions of the two axes.

    The angle is between undirected lines, so it lives in [0, 90]; states
    where either axis moves the ee by ~0 are skipped and counted.
    """
    if model.latent_dim != 2:
        raise ValueError("disentanglement angle needs a 2-DoF latent space")
    spec = test_set.spec
    geometry = spec.geometry
    states = sample_task_states(test_set, config.consistency_states)
    angles = []
    skipped = 0
    for state in states:
        zs = np.eye(2)
        actions = decode_batch(model, zs, state[None, :])
        dirs = []
        for a in actions:
            nxt = state + a * geometry.dt
            disp = fk_position(geometry, nxt[geometry.joint_slice(0)], 0) - fk_position(
                geometry, state[geometry.joint_slice(0)], 0
            )
            norm = np.linalg.norm(disp)
            dirs.append(disp / norm if norm > 1e-9 else None)
        if dirs[0] is None or dirs[1] is None:
            skipped += 1
            continue
        cos = abs(float(dirs[0] @ dirs[1]))
        angles.append(np.degrees(np.arccos(min(1.0, cos))))
    if not angles:
        return float("nan"), float("nan"), skipped
    return float(np.mean(angles)), float(np.std(angles)), skipped


# ---------------------------------------------------------------------------
# reach quality
# ---------------------------------------------------------------------------


def reach_quality(model: TrainedModel, spec: TaskSpec, start_state: np.ndarray, config: MetricConfig):
    """Steer toward sampled goals in ee space with the constant-latent
    solver; returns per-goal best distances and ee path arc lengths."""
    geometry = spec.geometry
    rng = np.random.default_rng(config.rng_seed)
    gx0, gy0, gx1, gy1 = spec.reach_goal_region
    goals = np.column_stack(
        [rng.uniform(gx0, gx1, config.reach_goals), rng.uniform(gy0, gy1, config.reach_goals)]
    )
    distances, lengths = [], []
    for goal in goals:
        def objective(states, goal=goal):
            ees = np.array([fk_position(geometry, s[: geometry.joints_per_arm], 0) for s in states])
            return np.linalg.norm(ees - goal[None, :], axis=1)

        dist, z = solve_constant_latent(model, geometry, start_state, objective, config)
        path = rollout_constant_z(model, geometry, start_state, objective, z, config.horizon_cap)
        ees = np.array([fk_position(geometry, s[: geometry.joints_per_arm], 0) for s in path])
        distances.append(dist)
        lengths.append(float(np.sum(np.linalg.norm(np.diff(ees, axis=0), axis=1))))
    return np.asarray(distances), np.asarray(lengths)
