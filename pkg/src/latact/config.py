"""TOML config files for tasks, models, and metrics.

Config files are the reviewable record of an experiment: a task file pins
the task kind, geometry, and task parameters; a model file pins the model
kind and training hyperparameters; a metrics file pins evaluation scopes
and the training-seed list. Anything omitted falls back to the library
defaults, so minimal files stay minimal.
"""

from __future__ import annotations

import sys
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

import numpy as np

from .arm import ArmGeometry
from .datagen import TaskKind, TaskSpec, default_geometry
from .metrics import MetricConfig
from .models import ModelConfig, ModelKind


class ConfigError(ValueError):
    """A config file is missing, unparsable, or inconsistent."""


def _read_toml(path) -> dict:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        with open(path, "rb") as f:
            return tomllib.load(f)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc


def load_task_config(path) -> tuple[TaskSpec, dict]:
    """Parse a task file; returns (spec, extras) where extras carries the
    optional [teleop] table (dataset path, alignment matrix, rates)."""
    doc = _read_toml(path)
    try:
        task = doc["task"]
        kind = TaskKind(task["kind"])
    except KeyError as exc:
        raise ConfigError(f"{path}: missing required key {exc}") from exc
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from exc

    geo_doc = doc.get("geometry", {})
    base_geo = default_geometry(kind)
    geometry = ArmGeometry(
        arm_count=int(geo_doc.get("arm_count", base_geo.arm_count)),
        joints_per_arm=int(geo_doc.get("joints_per_arm", base_geo.joints_per_arm)),
        link_length=float(geo_doc.get("link_length", base_geo.link_length)),
        base_positions=tuple(
            tuple(float(x) for x in b)
            for b in geo_doc.get("base_positions", base_geo.base_positions)
        ),
        dt=float(geo_doc.get("dt", base_geo.dt)),
    )

    params = dict(doc.get("params", {}))
    tuple_params = {
        "sine_x_span",
        "circle_center",
        "circle_radius_range",
        "rotate_pivot_box",
        "reach_start_ee",
        "reach_goal_region",
    }
    for key in list(params):
        if key in tuple_params:
            params[key] = tuple(float(x) for x in params[key])

    try:
        spec = TaskSpec(
            task_kind=kind,
            geometry=geometry,
            latent_dim_intended=int(task.get("latent_dim", _intended(kind))),
            target_pair_count=int(task.get("pair_count", 10000)),
            rng_seed=int(task.get("seed", 0)),
            trajectory_length=int(task.get("trajectory_length", 50)),
            **params,
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return spec, doc.get("teleop", {})


def _intended(kind: TaskKind) -> int:
    return {TaskKind.SINE: 1, TaskKind.ROTATE: 1, TaskKind.CIRCLE: 2, TaskKind.REACH: 1}[kind]


def load_model_config(path, task_latent_dim: int | None = None) -> ModelConfig:
    """Parse a model file. latent_dim = 0 (or omitted) means "use the task's
    intended latent dimension", which requires task_latent_dim."""
    doc = _read_toml(path)
    try:
        model = doc["model"]
        kind = ModelKind(model["kind"])
    except KeyError as exc:
        raise ConfigError(f"{path}: missing required key {exc}") from exc
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from exc

    d = int(model.get("latent_dim", 0))
    if d == 0:
        if task_latent_dim is None:
            raise ConfigError(f"{path}: latent_dim = 0 needs a task config to infer from")
        d = task_latent_dim
    try:
        return ModelConfig(
            kind=kind,
            latent_dim=d,
            hidden_sizes=tuple(int(h) for h in model.get("hidden_sizes", (64, 64))),
            learning_rate=float(model.get("learning_rate", 1e-2)),
            kl_weight=float(model.get("kl_weight", 0.1)),
            epochs=int(model.get("epochs", 200)),
            batch_size=int(model.get("batch_size", 64)),
            seed=int(model.get("seed", 0)),
            encoder_sees_state=bool(model.get("encoder_sees_state", False)),
        )
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def load_metric_config(path) -> tuple[MetricConfig, list[int]]:
    """Parse a metrics file; returns (MetricConfig, training seeds list)."""
    doc = _read_toml(path)
    m = doc.get("metrics", {})
    seeds = [int(s) for s in m.pop("seeds", [0])]
    try:
        config = MetricConfig(
            test_fraction=float(m.get("test_fraction", 0.2)),
            controllability_pairs=int(m.get("controllability_pairs", 1000)),
            horizon_cap=int(m.get("horizon_cap", 100)),
            z_grid=int(m.get("z_grid", 41)),
            consistency_states=int(m.get("consistency_states", 25)),
            consistency_grid=int(m.get("consistency_grid", 21)),
            reach_goals=int(m.get("reach_goals", 100)),
            rng_seed=int(m.get("seed", 0)),
        )
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return config, seeds


def load_alignment_from_teleop(extras: dict) -> np.ndarray | None:
    if "alignment" not in extras:
        return None
    return np.asarray(extras["alignment"], dtype=float)
