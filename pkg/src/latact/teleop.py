"""Session-oriented teleoperation loop: latent input in, plant state out.

A session owns the simulated arm for one operator. Each tick decodes the
latest latent input against the current state, gates it so a centered
joystick commands exactly zero motion, caps per-joint speed, steps the
plant, and publishes an event. Input is a synchronized latest-wins
register (no queueing: human-in-the-loop control wants freshness).
Subscribers get every event in order through bounded buffers; a subscriber
that falls behind is disconnected rather than ever blocking the loop.
"""

from __future__ import annotations

import itertools
import json
import threading
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .arm import ArmGeometry, JointState, forward_kinematics
from .datagen import DemoDataset, TaskKind, TaskSpec
from .errors import DimensionError, UnknownSessionError
from .models import TrainedModel, decode_batch

_session_counter = itertools.count(1)


@dataclass(frozen=True)
class TeleopConfig:
    tick_rate: float = 50.0
    deadzone: float = 0.05
    action_cap: float = 1.0
    history_cap: int = 10000
    subscriber_buffer: int = 256
    # warn when the state drifts farther than this from every training state;
    # None disables the guard
    ood_radius: float | None = None


class Subscription:
    """Bounded, ordered event feed for one subscriber."""

    def __init__(self, buffer: int):
        self._events: deque = deque()
        self._buffer = buffer
        self.overflowed = False

    def _push(self, event: dict) -> bool:
        if self.overflowed:
            return False
        if len(self._events) >= self._buffer:
            self.overflowed = True
            self._events.clear()
            self._events.append({"type": "overflow", "reason": "subscriber too slow"})
            return False
        self._events.append(event)
        return True

    def drain(self) -> list[dict]:
        out = list(self._events)
        self._events.clear()
        return out


def _task_start_state(task_spec: TaskSpec) -> np.ndarray:
    """Deterministic start posture: the first state of the task's own first
    demonstration trajectory (one-trajectory probe, same parameters)."""
    import dataclasses

    from .datagen import generate

    probe = dataclasses.replace(task_spec, target_pair_count=task_spec.trajectory_length)
    ds = generate(probe)
    return ds.states[0].copy()


class TeleopSession:
    """One operator's control loop state. Exactly one caller ticks it."""

    def __init__(
        self,
        model: TrainedModel,
        task_spec: TaskSpec,
        config: TeleopConfig = TeleopConfig(),
        start_state: np.ndarray | None = None,
        training_states: np.ndarray | None = None,
    ):
        geometry = task_spec.geometry
        if model.n != geometry.n:
            raise DimensionError(
                f"model expects n={model.n}, task geometry has n={geometry.n}"
            )
        self.id = f"session-{next(_session_counter)}"
        self.model = model
        self.task_spec = task_spec
        self.geometry = geometry
        self.config = config
        self.start_state = (
            np.asarray(start_state, dtype=float).copy()
            if start_state is not None
            else _task_start_state(task_spec)
        )
        if self.start_state.shape != (geometry.n,):
            raise DimensionError("start state does not match geometry")
        self.state = self.start_state.copy()
        self.paused = True
        self.faulted = False
        self.tick_index = 0
        self.history: deque = deque(maxlen=config.history_cap)
        self._z = np.zeros(model.latent_dim)
        self._lock = threading.Lock()
        self._subscribers: list[Subscription] = []
        self._training_states = training_states

    # -- input ---------------------------------------------------------

    def submit_input(self, z, client_time_ms: float | None = None) -> dict:
        z = np.asarray(z, dtype=float)
        if z.shape != (self.model.latent_dim,):
            raise DimensionError(
                f"input has {z.shape} entries, model wants d={self.model.latent_dim}"
            )
        z = np.nan_to_num(z, nan=0.0)
        clamped = np.clip(z, -1.0, 1.0)
        was_clamped = bool(np.any(clamped != z))
        gated = np.where(np.abs(clamped) < self.config.deadzone, 0.0, clamped)
        with self._lock:
            self._z = gated
        return {
            "type": "ack",
            "z": gated.tolist(),
            "clamped": was_clamped,
            "t": client_time_ms,
        }

    @property
    def current_input(self) -> np.ndarray:
        with self._lock:
            return self._z.copy()

    # -- lifecycle -------------------------------------------------------

    def pause(self) -> None:
        self.paused = True
        self._emit({"type": "lifecycle", "event": "paused", "t": self.tick_index})

    def resume(self) -> None:
        if self.faulted:
            self.faulted = False
        if self.paused:
            self.paused = False
            self._emit({"type": "lifecycle", "event": "resumed", "t": self.tick_index})

    def reset(self) -> None:
        self.state = self.start_state.copy()
        self.tick_index = 0
        self.history.clear()
        self.faulted = False
        with self._lock:
            self._z = np.zeros(self.model.latent_dim)
        self._emit({"type": "lifecycle", "event": "reset", "t": 0})

    # -- the loop ---------------------------------------------------------

    def tick(self) -> dict | None:
        """One Algorithm-1 iteration; no-op while paused or faulted."""
        if self.paused or self.faulted:
            return None
        z = self.current_input
        gate = min(1.0, float(np.max(np.abs(z))))  # zero input => zero motion
        if gate == 0.0:
            action = np.zeros(self.geometry.n)
        else:
            decoded = decode_batch(self.model, z[None, :], self.state[None, :])[0]
            if not np.all(np.isfinite(decoded)):
                self.faulted = True
                self.paused = True
                event = {
                    "type": "fault",
                    "reason": "decoder produced a non-finite action",
                    "t": self.tick_index,
                }
                self._emit(event)
                return event
            action = np.clip(decoded * gate, -self.config.action_cap, self.config.action_cap)
        self.state = self.state + action * self.geometry.dt
        self.tick_index += 1
        self.history.append((self.tick_index, self.state.copy(), z.copy(), action.copy()))
        event = self._state_event(z, action)
        self._emit(event)
        if self._training_states is not None and self.config.ood_radius is not None:
            dist = float(np.min(np.linalg.norm(self._training_states - self.state, axis=1)))
            if dist > self.config.ood_radius:
                self._emit({"type": "warn_ood", "distance": dist, "t": self.tick_index})
        return event

    def _state_event(self, z, action) -> dict:
        ees = []
        js = JointState(self.state)
        for arm in range(self.geometry.arm_count):
            pose = forward_kinematics(self.geometry, js, arm)
            ees.append([float(pose.position[0]), float(pose.position[1]), pose.orientation])
        return {
            "type": "state",
            "t": self.tick_index,
            "q": self.state.tolist(),
            "ee": ees,
            "z": z.tolist(),
            "a": action.tolist(),
        }

    # -- streaming ----------------------------------------------------------

    def subscribe(self) -> Subscription:
        sub = Subscription(self.config.subscriber_buffer)
        self._subscribers.append(sub)
        return sub

    def _emit(self, event: dict) -> None:
        dead = []
        for sub in self._subscribers:
            if not sub._push(event):
                dead.append(sub)
        for sub in dead:
            self._subscribers.remove(sub)

    # -- input logs -----------------------------------------------------------

    def input_log(self) -> list[dict]:
        """Per-tick inputs from history, replayable via :func:`replay_log`."""
        return [{"t": t, "z": z.tolist()} for t, _, z, _ in self.history]


def save_input_log(entries: list[dict], path) -> None:
    with open(path, "w") as f:
        for entry in entries:
            f.write(json.dumps(entry) + "\n")


def load_input_log(path) -> list[dict]:
    with open(path) as f:
        return [json.loads(line) for line in f if line.strip()]


def replay_log(
    model: TrainedModel,
    task_spec: TaskSpec,
    entries: list[dict],
    config: TeleopConfig = TeleopConfig(),
    start_state: np.ndarray | None = None,
) -> list[np.ndarray]:
    """Re-run a recorded input log tick by tick; returns the state history.

    Decoding is deterministic, so replaying a log reproduces the original
    trajectory bitwise.
    """
    session = TeleopSession(model, task_spec, config, start_state=start_state)
    session.resume()
    states = [session.state.copy()]
    for entry in entries:
        session.submit_input(np.asarray(entry["z"], dtype=float))
        session.tick()
        states.append(session.state.copy())
    return states
