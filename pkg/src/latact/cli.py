"""Single command-line entry point for the whole pipeline.

Subcommands mirror the pipeline stages: gen-data, train, align, eval,
serve, replay. Every stage except serve is deterministic given its config
files and seeds. Exit codes: 0 success, 1 runtime failure, 2 usage or
config error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import datagen
from .align import propose_alignment, require_orthogonal
from .config import ConfigError, load_metric_config, load_model_config, load_task_config
from .errors import LatactError
from .models import load_model, save_model, train
from .report import emit_plots, run_suite

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_USAGE = 2


def _thread_cap() -> int:
    # LATACT_THREADS caps internal parallelism; generation and training are
    # deterministic single-threaded reductions, so 1 is always honored
    try:
        return max(1, int(os.environ.get("LATACT_THREADS", "1")))
    except ValueError:
        return 1


def cmd_gen_data(args) -> int:
    spec, _ = load_task_config(args.task)
    if args.seed is not None:
        import dataclasses

        spec = dataclasses.replace(spec, rng_seed=args.seed)
    dataset = datagen.generate(spec)
    replay_err = dataset.replay_error()
    out = Path(args.out)
    if args.format == "jsonl":
        datagen.export_jsonl(dataset, out)
    else:
        datagen.save(dataset, out)
    print(f"wrote {len(dataset)} pairs ({dataset.n_trajectories} trajectories) to {out}")
    print(f"replay self-consistency: max deviation {replay_err:.3e} (tolerance 1e-9)")
    if replay_err >= 1e-9:
        print("self-consistency check FAILED", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


def cmd_train(args) -> int:
    dataset = datagen.load(args.data)
    config = load_model_config(args.model, task_latent_dim=dataset.spec.latent_dim_intended)
    if args.seed is not None:
        import dataclasses

        config = dataclasses.replace(config, seed=args.seed)
    train_ds, test_ds = dataset.split_trajectories(0.2, seed=0)
    model = train(config, train_ds)
    from .models import reconstruction_mse

    train_mse = reconstruction_mse(model, train_ds.states, train_ds.actions)
    test_mse = reconstruction_mse(model, test_ds.states, test_ds.actions)
    save_model(model, args.out)
    print(f"trained {config.kind.value} (d={config.latent_dim}) on {len(train_ds)} pairs")
    print(f"final train MSE {train_mse:.6f}  test MSE {test_mse:.6f}")
    for warning in model.training_warnings:
        print(f"warning: {warning}", file=sys.stderr)
    return EXIT_OK


def cmd_align(args) -> int:
    model = load_model(args.model)
    if args.matrix is not None:
        matrix = np.asarray(json.loads(args.matrix), dtype=float)
        transform = require_orthogonal(matrix, model.latent_dim)
    else:
        dataset = datagen.load(args.data)
        transform = propose_alignment(model, dataset)
    model.set_alignment(transform)
    out = args.out or args.model
    save_model(model, out)
    print(f"alignment set to {transform.tolist()} -> {out}")
    return EXIT_OK


def cmd_eval(args) -> int:
    spec, _ = load_task_config(args.task)
    metric_config, seeds = load_metric_config(args.metrics)
    if args.data:
        dataset = datagen.load(args.data, expect_n=spec.geometry.n)
    else:
        dataset = datagen.generate(spec)
    model_configs = [
        load_model_config(path, task_latent_dim=spec.latent_dim_intended) for path in args.models
    ]
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    progress = (lambda msg: print(f"  evaluating {msg}", flush=True)) if args.verbose else None
    report = run_suite(dataset, model_configs, seeds, metric_config, progress=progress)
    csv_path = out_dir / f"{report.task}_report.csv"
    report.to_csv(csv_path)
    summary = report.summary()
    (out_dir / f"{report.task}_summary.txt").write_text(summary + "\n")
    print(summary)
    print(f"wrote {csv_path}")
    if args.emit_plots:
        from .models import train as train_model

        train_ds, _ = dataset.split_trajectories(metric_config.test_fraction, seed=metric_config.rng_seed)
        models = {}
        for config in model_configs:
            try:
                models[config.kind.value] = train_model(config, train_ds)
            except Exception as exc:
                print(f"plot model {config.kind.value} failed: {exc}", file=sys.stderr)
        for path in emit_plots(dataset, models, out_dir, metric_config):
            print(f"wrote {path}")
    failed = [r for r in report.rows if r.error]
    return EXIT_RUNTIME if failed and len(failed) == len(report.rows) else EXIT_OK


def cmd_serve(args) -> int:
    from .server import build_app, run_server

    models = {}
    for entry in args.model:
        if "=" not in entry:
            print(f"--model wants name=path, got {entry!r}", file=sys.stderr)
            return EXIT_USAGE
        name, path = entry.split("=", 1)
        models[name] = Path(path)
    tasks = {}
    for entry in args.task:
        if "=" not in entry:
            print(f"--task wants name=path, got {entry!r}", file=sys.stderr)
            return EXIT_USAGE
        name, path = entry.split("=", 1)
        tasks[name] = Path(path)
    app = build_app(models, tasks, static_dir=args.static)
    return run_server(app, host=args.host, port=args.port)


def cmd_replay(args) -> int:
    from .teleop import load_input_log, replay_log

    model = load_model(args.model)
    spec, _ = load_task_config(args.task)
    entries = load_input_log(args.log)
    states = replay_log(model, spec, entries)
    stacked = np.asarray(states)
    digest = hashlib.sha256(stacked.tobytes()).hexdigest()
    print(f"replayed {len(entries)} ticks; trajectory sha256 {digest}")
    if args.out:
        np.save(args.out, stacked)
        print(f"wrote {args.out}")
    if args.check:
        expected = np.load(args.check)
        if expected.shape == stacked.shape and np.array_equal(expected, stacked):
            print("replay matches recorded trajectory bitwise")
        else:
            print("replay DIFFERS from recorded trajectory", file=sys.stderr)
            return EXIT_RUNTIME
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="latact",
        description="latent-action embeddings for low-DoF teleoperation of planar arms",
    )
    parser.add_argument("--verbose", action="store_true", help="chatty progress output")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="synthesize a demonstration dataset")
    p.add_argument("--task", required=True, help="task config (TOML)")
    p.add_argument("--out", required=True, help="output dataset file")
    p.add_argument("--format", choices=("binary", "jsonl"), default="binary")
    p.add_argument("--seed", type=int, default=None, help="override the task seed")
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser("train", help="train one embedding model")
    p.add_argument("--model", required=True, help="model config (TOML)")
    p.add_argument("--data", required=True, help="dataset file")
    p.add_argument("--out", required=True, help="output model file")
    p.add_argument("--seed", type=int, default=None, help="override the model seed")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("align", help="set or propose the latent alignment")
    p.add_argument("--model", required=True, help="model file")
    p.add_argument("--data", help="dataset file (for --auto)")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--auto", action="store_true", help="propose automatically")
    group.add_argument("--matrix", help="row-major JSON matrix, e.g. '[[0,1],[1,0]]'")
    p.add_argument("--out", help="output model file (default: overwrite input)")
    p.set_defaults(func=cmd_align)

    p = sub.add_parser("eval", help="run the evaluation suite")
    p.add_argument("--task", required=True, help="task config (TOML)")
    p.add_argument("--metrics", required=True, help="metrics config (TOML)")
    p.add_argument("--models", nargs="+", required=True, help="model configs (TOML)")
    p.add_argument("--data", help="dataset file (default: generate from task config)")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--emit-plots", action="store_true", help="also write SVG plots")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("serve", help="run the teleoperation service")
    p.add_argument("--model", action="append", default=[], help="name=model-file (repeatable)")
    p.add_argument("--task", action="append", default=[], help="name=task-config (repeatable)")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--static", default=None, help="directory of UI assets to serve")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("replay", help="re-run a recorded input log")
    p.add_argument("--model", required=True, help="model file")
    p.add_argument("--task", required=True, help="task config (TOML)")
    p.add_argument("--log", required=True, help="input log (JSONL)")
    p.add_argument("--out", help="write the replayed trajectory (.npy)")
    p.add_argument("--check", help="trajectory file to compare bitwise (.npy)")
    p.set_defaults(func=cmd_replay)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    _thread_cap()
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FileNotFoundError as exc:
        print(f"missing file: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except LatactError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except KeyboardInterrupt:
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
