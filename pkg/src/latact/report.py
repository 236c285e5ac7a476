"""Cross-product evaluation suite and report emission.

`run_suite` retrains every requested model kind with each training seed on
one task's dataset, computes the dependent measures that apply to that
task, and aggregates mean +- SD per kind. Reports go out as a CSV (one row
per task x model x seed, fixed column order), a human-readable summary
table, and optional SVG plots (latent-vs-displacement scatter and
constant-z rollout traces).
"""

from __future__ import annotations

import csv
import dataclasses
from dataclasses import dataclass, field

import numpy as np

from .datagen import DemoDataset, TaskKind, TaskSpec
from .metrics import (
    MetricConfig,
    accuracy,
    consistency_scalability,
    controllability,
    disentanglement_angle,
    reach_quality,
    sample_state_pairs,
)
from .models import ModelConfig, ModelKind, TrainedModel, reconstruction_mse, train

CSV_COLUMNS = [
    "task",
    "model",
    "seed",
    "test_mse",
    "pct_of_pca",
    "ctrl_error",
    "ctrl_pct_of_pca",
    "r2",
    "angle_mean_deg",
    "angle_sd_deg",
    "reach_dist_mean",
    "reach_dist_sd",
    "reach_len_mean",
    "reach_len_sd",
    "error",
]


@dataclass
class SuiteRow:
    task: str
    model: str
    seed: int
    test_mse: float = float("nan")
    pct_of_pca: float = float("nan")
    ctrl_error: float = float("nan")
    ctrl_pct_of_pca: float = float("nan")
    r2: float = float("nan")
    angle_mean_deg: float = float("nan")
    angle_sd_deg: float = float("nan")
    reach_dist_mean: float = float("nan")
    reach_dist_sd: float = float("nan")
    reach_len_mean: float = float("nan")
    reach_len_sd: float = float("nan")
    error: str = ""


@dataclass
class EvalReport:
    task: str
    rows: list[SuiteRow] = field(default_factory=list)

    def aggregate(self) -> dict[str, dict[str, tuple[float, float]]]:
        """Per model kind: metric -> (mean, sd) over seeds, NaNs skipped."""
        out: dict[str, dict[str, tuple[float, float]]] = {}
        kinds = sorted({r.model for r in self.rows})
        numeric = [c for c in CSV_COLUMNS if c not in ("task", "model", "seed", "error")]
        for kind in kinds:
            rows = [r for r in self.rows if r.model == kind and not r.error]
            out[kind] = {}
            for col in numeric:
                vals = np.array([getattr(r, col) for r in rows], dtype=float)
                vals = vals[np.isfinite(vals)]
                if len(vals):
                    out[kind][col] = (float(vals.mean()), float(vals.std()))
        return out

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(CSV_COLUMNS)
            for r in self.rows:
                writer.writerow([getattr(r, c) for c in CSV_COLUMNS])

    def summary(self) -> str:
        agg = self.aggregate()
        lines = [f"task: {self.task}"]
        header = f"{'model':<6} {'MSE %PCA':>12} {'ctrl %PCA':>12} {'R^2':>8} {'angle':>12} {'reach d':>10} {'reach len':>10}"
        lines.append(header)
        lines.append("-" * len(header))

        def fmt(pair, digits=1):
            if pair is None:
                return "-"
            return f"{pair[0]:.{digits}f}±{pair[1]:.{digits}f}"

        for kind, stats in agg.items():
            lines.append(
                f"{kind:<6} {fmt(stats.get('pct_of_pca')):>12} "
                f"{fmt(stats.get('ctrl_pct_of_pca')):>12} "
                f"{fmt(stats.get('r2'), 3):>8} "
                f"{fmt(stats.get('angle_mean_deg')):>12} "
                f"{fmt(stats.get('reach_dist_mean'), 2):>10} "
                f"{fmt(stats.get('reach_len_mean'), 2):>10}"
            )
        failures = [r for r in self.rows if r.error]
        for r in failures:
            lines.append(f"FAILED {r.model} seed {r.seed}: {r.error}")
        return "\n".join(lines)


def metrics_for_task(kind: TaskKind, latent_dim: int) -> set[str]:
    wanted = {"accuracy", "consistency"}
    if kind in (TaskKind.SINE, TaskKind.ROTATE):
        wanted.add("controllability")
    if latent_dim == 2:
        wanted.add("disentanglement")
    if kind is TaskKind.REACH:
        wanted.add("reach")
    return wanted


def run_suite(
    dataset: DemoDataset,
    model_configs: list[ModelConfig],
    seeds: list[int],
    metric_config: MetricConfig,
    progress=None,
) -> EvalReport:
    """Evaluate every (model config, seed) pair on one task's dataset.

    The dataset is split once (whole trajectories); the PCA baseline is
    trained on the same split and reused to normalize every row. Individual
    training failures are recorded in the row and the suite continues.
    """
    spec = dataset.spec
    report = EvalReport(task=spec.task_kind.value)
    train_ds, test_ds = dataset.split_trajectories(metric_config.test_fraction, seed=metric_config.rng_seed)

    pca_config = next(
        (c for c in model_configs if c.kind is ModelKind.PCA),
        ModelConfig(ModelKind.PCA, model_configs[0].latent_dim),
    )
    pca_model = train(pca_config, train_ds)
    pca_mse = reconstruction_mse(pca_model, test_ds.states, test_ds.actions)

    pairs = sample_state_pairs(
        test_ds,
        metric_config.controllability_pairs,
        metric_config.rng_seed,
        within_trajectory=spec.task_kind is TaskKind.ROTATE,
    )
    pca_ctrl: float | None = None

    start_state = dataset.states[0].copy()

    for config in model_configs:
        wanted = metrics_for_task(spec.task_kind, config.latent_dim)
        for seed in seeds:
            row = SuiteRow(task=spec.task_kind.value, model=config.kind.value, seed=seed)
            report.rows.append(row)
            if progress:
                progress(f"{config.kind.value} seed {seed}")
            try:
                model = (
                    pca_model
                    if config.kind is ModelKind.PCA
                    else train(dataclasses.replace(config, seed=seed), train_ds)
                )
                row.test_mse, row.pct_of_pca = accuracy(model, test_ds, pca_mse)
                if "controllability" in wanted:
                    if pca_ctrl is None:
                        pca_ctrl = controllability(pca_model, test_ds, metric_config, state_pairs=pairs)
                    row.ctrl_error = controllability(model, test_ds, metric_config, state_pairs=pairs)
                    row.ctrl_pct_of_pca = 100.0 * row.ctrl_error / pca_ctrl if pca_ctrl > 0 else float("nan")
                if "consistency" in wanted:
                    row.r2 = consistency_scalability(model, test_ds, metric_config)
                if "disentanglement" in wanted:
                    row.angle_mean_deg, row.angle_sd_deg, _ = disentanglement_angle(
                        model, test_ds, metric_config
                    )
                if "reach" in wanted:
                    dists, lengths = reach_quality(model, spec, start_state, metric_config)
                    row.reach_dist_mean = float(dists.mean())
                    row.reach_dist_sd = float(dists.std())
                    row.reach_len_mean = float(lengths.mean())
                    row.reach_len_sd = float(lengths.std())
            except Exception as exc:  # record, keep going
                row.error = f"{type(exc).__name__}: {exc}"
            if config.kind is ModelKind.PCA:
                break  # PCA is deterministic; one row regardless of seeds
    return report


# ---------------------------------------------------------------------------
# plots
# ---------------------------------------------------------------------------


def emit_plots(dataset: DemoDataset, models: dict[str, TrainedModel], out_dir, metric_config=None) -> list[str]:
    """SVG analogs of the paper-style figures: z-vs-displacement scatter and
    constant-z rollout traces over the task geometry."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    from .metrics import _signed_displacement, sample_task_states
    from .models import decode_batch

    metric_config = metric_config or MetricConfig()
    spec = dataset.spec
    geometry = spec.geometry
    out_dir = str(out_dir)
    written = []

    states = sample_task_states(dataset, 9)
    zs = np.linspace(-1, 1, metric_config.consistency_grid)

    fig, ax = plt.subplots(figsize=(6, 4))
    for name, model in models.items():
        xs, ys = [], []
        for state in states:
            grid = np.zeros((len(zs), model.latent_dim))
            grid[:, 0] = zs
            actions = decode_batch(model, grid, state[None, :])
            for z, a in zip(zs, actions):
                nxt = state + a * geometry.dt
                xs.append(z)
                ys.append(_signed_displacement(spec, state, nxt, 0))
        ax.scatter(xs, ys, s=6, alpha=0.6, label=name)
    ax.set_xlabel("latent input z")
    ax.set_ylabel("signed displacement")
    ax.set_title(f"{spec.task_kind.value}: latent action vs displacement")
    ax.legend()
    scatter_path = f"{out_dir}/{spec.task_kind.value}_z_vs_displacement.svg"
    fig.savefig(scatter_path)
    plt.close(fig)
    written.append(scatter_path)

    fig, ax = plt.subplots(figsize=(6, 5))
    _draw_task_geometry(ax, spec)
    from .arm import fk_position

    start = dataset.states[0]
    for name, model in models.items():
        for z_val, style in ((1.0, "-"), (-1.0, "--")):
            state = start.copy()
            trace = [fk_position(geometry, state[geometry.joint_slice(0)], 0)]
            z = np.zeros((1, model.latent_dim))
            z[0, 0] = z_val
            for _ in range(80):
                a = decode_batch(model, z, state[None, :])[0]
                if not np.all(np.isfinite(a)):
                    break
                state = state + a * geometry.dt
                trace.append(fk_position(geometry, state[geometry.joint_slice(0)], 0))
            trace = np.asarray(trace)
            ax.plot(trace[:, 0], trace[:, 1], style, label=f"{name} z={z_val:+.0f}", alpha=0.8)
    ax.set_aspect("equal")
    ax.legend(fontsize=7)
    ax.set_title(f"{spec.task_kind.value}: constant-z rollouts")
    rollout_path = f"{out_dir}/{spec.task_kind.value}_rollouts.svg"
    fig.savefig(rollout_path)
    plt.close(fig)
    written.append(rollout_path)
    return written


def _draw_task_geometry(ax, spec: TaskSpec) -> None:
    import matplotlib.patches as patches

    if spec.task_kind is TaskKind.SINE:
        xs = np.linspace(*spec.sine_x_span, 300)
        k = 2 * np.pi / spec.sine_wavelength
        ax.plot(xs, spec.sine_amplitude * np.sin(k * xs), color="0.8", lw=3, zorder=0)
    elif spec.task_kind is TaskKind.CIRCLE:
        for r in np.linspace(*spec.circle_radius_range, 3):
            ax.add_patch(
                patches.Circle(spec.circle_center, r, fill=False, color="0.85", zorder=0)
            )
    elif spec.task_kind is TaskKind.REACH:
        gx0, gy0, gx1, gy1 = spec.reach_goal_region
        ax.add_patch(
            patches.Rectangle((gx0, gy0), gx1 - gx0, gy1 - gy0, color="0.9", zorder=0)
        )
    elif spec.task_kind is TaskKind.ROTATE:
        x0, y0, x1, y1 = spec.rotate_pivot_box
        ax.add_patch(patches.Rectangle((x0, y0), x1 - x0, y1 - y0, color="0.9", zorder=0))
