"""Orthogonal alignment of learned latent axes to task-canonical directions.

A trained model's latent axes come out in an arbitrary orientation: +z may
run the sine wave backwards, or the two circle axes may land rotated. The
alignment transform is a stored d x d orthogonal matrix applied to joystick
inputs before decoding. The proposer searches sign flips (d=1) plus
rotations/reflections in 1-degree steps (d=2) for the transform whose
induced end-effector motions best match the task's reference directions;
it probes the raw decoder, so the result is stored as-is (overwrite, not
composition).
"""

from __future__ import annotations

import numpy as np

from .arm import JointState, fk_position
from .datagen import DemoDataset, TaskKind, canonical_axes
from .errors import AlignmentError

ORTHO_TOL = 1e-10


def require_orthogonal(matrix: np.ndarray, d: int) -> np.ndarray:
    """Validate Q^T Q = I (to 1e-10) and |det| = 1; returns a float64 copy."""
    q = np.asarray(matrix, dtype=float)
    if q.shape != (d, d):
        raise AlignmentError(f"alignment must be {d}x{d}, got {q.shape}")
    if np.max(np.abs(q.T @ q - np.eye(d))) > ORTHO_TOL:
        raise AlignmentError("alignment matrix is not orthogonal")
    if abs(abs(np.linalg.det(q)) - 1.0) > ORTHO_TOL:
        raise AlignmentError("alignment matrix must have |det| = 1")
    return q.copy()


def set_alignment(model, transform: np.ndarray) -> None:
    """Store the transform on the model; decode applies it henceforth."""
    model.set_alignment(transform)


def propose_alignment(
    model,
    dataset: DemoDataset,
    reference_axes: np.ndarray | None = None,
) -> np.ndarray:
    """Search for the orthogonal transform matching latent axes to the task.

    Each candidate Q is scored by the mean cosine between the ee displacement
    produced by decoding Q @ e_j at the dataset's median state and reference
    direction j (for Rotate: sign agreement of the box rotation sense, +z
    counterclockwise). Ties break toward the identity. Only d <= 2 is
    supported, matching the tasks in scope.
    """
    from .models import decode_batch

    d = model.latent_dim
    if d > 2:
        raise AlignmentError(f"alignment proposal supports d <= 2, got d={d}")
    spec = dataset.spec
    state = dataset.median_state()
    geometry = spec.geometry

    rotate_task = spec.task_kind is TaskKind.ROTATE
    refs = None
    if not rotate_task:
        refs = (
            np.asarray(reference_axes, dtype=float)
            if reference_axes is not None
            else canonical_axes(spec, JointState(state))
        )
        if refs.shape != (d, 2):
            raise AlignmentError(f"need {d} reference directions, got shape {refs.shape}")

    states = np.repeat(state[None, :], d, 0)
    ee_before = fk_position(geometry, state[geometry.joint_slice(0)], 0)

    def score(q: np.ndarray) -> float:
        # row j holds Q @ e_j, the native code for joystick axis j
        actions = decode_batch(model, q.T, states, apply_alignment=False)
        total = 0.0
        for j in range(d):
            nxt = state + actions[j] * geometry.dt
            if rotate_task:
                delta = np.mean(
                    [
                        np.sum(nxt[geometry.joint_slice(i)]) - np.sum(state[geometry.joint_slice(i)])
                        for i in range(geometry.arm_count)
                    ]
                )
                total += float(np.sign(delta))
            else:
                disp = fk_position(geometry, nxt[geometry.joint_slice(0)], 0) - ee_before
                norm = np.linalg.norm(disp)
                if norm > 1e-12:
                    total += float(disp @ refs[j]) / norm
        return total / d

    best_q, best = None, -np.inf
    for q in _candidates(d):  # identity first, so ties keep it
        s = score(q)
        if s > best + 1e-12:
            best_q, best = q, s
    return require_orthogonal(best_q, d)


def _candidates(d: int) -> list[np.ndarray]:
    if d == 1:
        return [np.array([[1.0]]), np.array([[-1.0]])]
    cands = [np.eye(2)]
    flip = np.diag([1.0, -1.0])
    for deg in range(360):
        theta = np.deg2rad(deg)
        c, s = np.cos(theta), np.sin(theta)
        rot = np.array([[c, -s], [s, c]])
        cands.append(rot)
        cands.append(rot @ flip)
    return cands
