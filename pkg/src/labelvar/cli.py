"""Command-line surface: data generation and inspection, training, sweeps,
verification suites, boundary export, and SVG plot emission.

Exit codes: 0 success, 1 configuration error, 2 data/parse error, 3 numeric
failure, 4 verification failure. Flag precedence is defaults < JSON config
file < explicit flags.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

from . import __version__
from .data import (
    SyntheticConfig,
    export_csv,
    load_cifar10_binary,
    load_mnist_idx,
    sample_boundary_2d,
    sample_lowvar_highvar,
)
from .diagnostics import boundary_grid
from .errors import (
    ConfigurationError,
    DataFormatError,
    LabelVarError,
    NumericError,
    VerificationFailure,
)
from .models import model_from_json, model_to_json
from .optim import AdamWParams
from .recipes import RECIPE_DEFAULTS, build_experiment
from .svgplot import PLOT_KINDS, emit_svg_plot
from .sweep import (
    DEFAULT_SEEDS,
    METHODS,
    SweepConfig,
    aggregate_and_write,
    method_settings,
    plan_grid,
    run_sweep,
)
from .training import TrainConfig, fit
from .verify import SUITES, run_suite
CONFIG_SCHEMA_VERSION = 1

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_DATA = 2
EXIT_NUMERIC = 3
EXIT_VERIFY = 4


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="labelvar",
        description="Numerical laboratory for label-augmented training objectives.",
    )
    parser.add_argument("--version", action="version", version=f"labelvar {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def common(p):
        p.add_argument("--config", help="JSON file with flag defaults")
        p.add_argument("--seed", type=int, help="master RNG seed (default 0)")
        p.add_argument("--jobs", type=int, help="worker processes (default 1)")

    p = sub.add_parser("data", help="generate or inspect datasets")
    data_sub = p.add_subparsers(dest="action", required=True)
    g = data_sub.add_parser("generate", help="sample a synthetic dataset to CSV")
    common(g)
    g.add_argument("--kind", choices=("lowvar-highvar", "boundary2d"),
                   default="lowvar-highvar")
    g.add_argument("--n", type=int, help="sample count (default 1000)")
    g.add_argument("--d", type=int, help="dimensionality (default 10)")
    g.add_argument("--gamma", type=float, help="low-variance scale (default 0.1)")
    g.add_argument("--out", required=True, help="output CSV path")
    m = data_sub.add_parser("load-mnist", help="inspect IDX image/label files")
    common(m)
    m.add_argument("--images", required=True)
    m.add_argument("--labels", required=True)
    c = data_sub.add_parser("load-cifar", help="inspect CIFAR-10 binary batches")
    common(c)
    c.add_argument("--paths", nargs="+", required=True)

    p = sub.add_parser("train", help="train one model on a named experiment")
    common(p)
    p.add_argument("--recipe", choices=tuple(RECIPE_DEFAULTS), required=True)
    p.add_argument("--method", choices=METHODS, required=True)
    p.add_argument("--value", type=float, required=True,
                   help="hyperparameter value (lambda / alpha / mixing alpha)")
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch-size", type=int)
    p.add_argument("--learning-rate", type=float)
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("sweep", help="hyperparameter grid sweep over seeds")
    common(p)
    p.add_argument("--recipe", choices=tuple(RECIPE_DEFAULTS), required=True)
    p.add_argument("--method", choices=METHODS, required=True)
    p.add_argument("--grid-lo", type=float)
    p.add_argument("--grid-hi", type=float)
    p.add_argument("--grid-count", type=int)
    p.add_argument("--seeds", type=int, nargs="+")
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch-size", type=int)
    p.add_argument("--learning-rate", type=float)
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("verify", help="run randomized verification suites")
    common(p)
    p.add_argument("--suite", choices=SUITES + ("all",), default="all")
    p.add_argument("--out", help="optional directory for a JSON report")

    p = sub.add_parser("boundary", help="export a 2-D decision-boundary grid")
    common(p)
    p.add_argument("--model", required=True, help="model JSON file")
    p.add_argument("--region", type=float, nargs=4,
                   metavar=("X_MIN", "X_MAX", "Y_MIN", "Y_MAX"))
    p.add_argument("--resolution", type=int)
    p.add_argument("--out", required=True, help="output CSV path")

    p = sub.add_parser("plot", help="render a CSV into a static SVG")
    common(p)
    p.add_argument("--csv", required=True)
    p.add_argument("--kind", choices=PLOT_KINDS, required=True)
    p.add_argument("--out", required=True, help="output SVG path")

    return parser


def _apply_config_file(args: argparse.Namespace, argv: list[str]):
    """Merge: defaults < config file < flags given on the command line."""
    if not getattr(args, "config", None):
        return
    try:
        with open(args.config) as f:
            doc = json.load(f)
    except OSError as exc:
        raise DataFormatError(f"cannot read config file: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise DataFormatError(f"config file is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise DataFormatError("config file must hold a JSON object")
    version = doc.pop("schema_version", CONFIG_SCHEMA_VERSION)
    if version != CONFIG_SCHEMA_VERSION:
        raise DataFormatError(f"unsupported config schema_version {version}")
    explicit = {tok.split("=", 1)[0].lstrip("-").replace("-", "_")
                for tok in argv if tok.startswith("--")}
    for key, value in doc.items():
        attr = key.replace("-", "_")
        if not hasattr(args, attr):
            raise ConfigurationError(f"config file key {key!r} is not a known flag")
        if attr in explicit:
            continue  # command-line flag wins
        setattr(args, attr, value)


def _defaults(args, **pairs):
    for name, value in pairs.items():
        if getattr(args, name, None) is None:
            setattr(args, name, value)


def _effective_config(args) -> dict:
    doc = {k: v for k, v in sorted(vars(args).items()) if k != "config"}
    doc["schema_version"] = CONFIG_SCHEMA_VERSION
    doc["tool_version"] = __version__
    return doc


def _train_config_for(recipe: str, args) -> TrainConfig:
    presets = {
        "defC1": dict(epochs=100, batch_size=500, learning_rate=5e-3),
        "boundary2d": dict(epochs=500, batch_size=500, learning_rate=1e-2),
        "spurious_binary": dict(epochs=50, batch_size=1024, learning_rate=5e-3),
        "colored_multiclass": dict(epochs=10, batch_size=500, learning_rate=0.25),
    }
    base = presets[recipe]
    return TrainConfig(
        epochs=args.epochs if args.epochs is not None else base["epochs"],
        batch_size=args.batch_size if args.batch_size is not None else base["batch_size"],
        learning_rate=(args.learning_rate if args.learning_rate is not None
                       else base["learning_rate"]),
        adamw=AdamWParams(),
        seed=args.seed,
        diagnostics_every=1,
    )


def _cmd_data(args) -> int:
    if args.action == "generate":
        _defaults(args, seed=0, n=1000, d=10, gamma=0.1)
        if args.kind == "boundary2d":
            ds = sample_boundary_2d(args.n, seed=args.seed)
        else:
            ds = sample_lowvar_highvar(SyntheticConfig(
                d=args.d, n=args.n, gamma=args.gamma, seed=args.seed))
        export_csv(ds, args.out)
        print(args.out)
        return EXIT_OK
    if args.action == "load-mnist":
        img = load_mnist_idx(args.images, args.labels)
        print(f"images: {img.n} x {img.height}x{img.width}, "
              f"labels: {img.n} in [0, {img.k})")
        return EXIT_OK
    img = load_cifar10_binary(list(args.paths))
    print(f"images: {img.n} x {img.height}x{img.width}x{img.channels}, "
          f"labels in [0, {img.k})")
    return EXIT_OK


def _cmd_train(args) -> int:
    _defaults(args, seed=0, jobs=1)
    spec, wd = method_settings(args.method, args.value)
    cfg = _train_config_for(args.recipe, args)
    cfg = dataclasses.replace(cfg, adamw=AdamWParams(decoupled_wd=wd))
    exp = build_experiment(args.recipe, RECIPE_DEFAULTS[args.recipe],
                           data_seed=args.seed, init_seed=args.seed + 1)
    report = fit(exp.model, exp.train, exp.test, spec, cfg)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    model_path = out_dir / "model.json"
    model_path.write_text(model_to_json(report.model))
    diag_path = out_dir / "diagnostics.csv"
    with open(diag_path, "w") as f:
        f.write("epoch,test_error,output_variance,target_output_variance,"
                "norm_low,norm_high,ratio_first\n")
        for d in report.diagnostics:
            f.write(f"{d.epoch},{d.test_error:.17g},{d.output_variance:.17g},"
                    f"{d.target_output_variance:.17g},{d.norm_low:.17g},"
                    f"{d.norm_high:.17g},{d.ratio_first:.17g}\n")
    manifest = {
        "config": _effective_config(args),
        "final_test_error": report.test_error[-1] if report.test_error else None,
        "final_train_loss": report.train_loss[-1] if report.train_loss else None,
    }
    manifest_path = out_dir / "manifest.json"
    manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True, default=str))
    for path in (model_path, diag_path, manifest_path):
        print(path)
    return EXIT_OK


def _cmd_sweep(args) -> int:
    _defaults(args, seed=0, jobs=1, grid_lo=0.0, grid_count=20)
    if args.grid_hi is None:
        args.grid_hi = {"weight_decay": 0.02, "label_smoothing": 0.75,
                        "mixup": 8.0}[args.method]
    grid = plan_grid(args.method, args.grid_lo, args.grid_hi, args.grid_count)
    seeds = tuple(args.seeds) if args.seeds else DEFAULT_SEEDS
    cfg = SweepConfig(
        method=args.method,
        grid=tuple(grid),
        experiment=args.recipe,
        train=_train_config_for(args.recipe, args),
        data=RECIPE_DEFAULTS[args.recipe],
        seeds=seeds,
        master_seed=args.seed,
    )
    result = run_sweep(cfg, parallelism=args.jobs)
    manifest = aggregate_and_write(result, args.out)
    manifest["cli_config"] = _effective_config(args)
    out_dir = Path(args.out)
    (out_dir / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True, default=str))
    for name in ("raw.csv", "aggregate.csv", "manifest.json"):
        print(out_dir / name)
    return EXIT_OK


def _cmd_verify(args) -> int:
    _defaults(args, seed=None)
    names = SUITES if args.suite == "all" else (args.suite,)
    reports = [run_suite(name, seed=args.seed) for name in names]
    for r in reports:
        print(r.summary())
        for failure in r.failures[:10]:
            print(f"  {failure}", file=sys.stderr)
    if args.out:
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        report_path = out_dir / "verify_report.json"
        report_path.write_text(json.dumps({
            "config": _effective_config(args),
            "suites": [{"suite": r.suite, "total": r.total, "passed": r.passed,
                        "failures": r.failures} for r in reports],
        }, indent=2, sort_keys=True, default=str))
        print(report_path)
    if any(not r.ok for r in reports):
        raise VerificationFailure(
            "; ".join(r.summary() for r in reports if not r.ok))
    return EXIT_OK


def _cmd_boundary(args) -> int:
    _defaults(args, region=[-10.0, 10.0, -2.0, 2.0], resolution=100)
    try:
        text = Path(args.model).read_text()
    except OSError as exc:
        raise DataFormatError(f"cannot read model file: {exc}") from exc
    model = model_from_json(text)
    grid = boundary_grid(model, tuple(args.region), args.resolution)
    grid.export_csv(args.out)
    if grid.angle_degrees is not None:
        print(f"boundary angle: {grid.angle_degrees:.3f} degrees", file=sys.stderr)
    print(args.out)
    return EXIT_OK


def _cmd_plot(args) -> int:
    out = emit_svg_plot(args.csv, args.kind, args.out)
    print(out)
    return EXIT_OK


_COMMANDS = {
    "data": _cmd_data,
    "train": _cmd_train,
    "sweep": _cmd_sweep,
    "verify": _cmd_verify,
    "boundary": _cmd_boundary,
    "plot": _cmd_plot,
}


def run_command(argv: list[str]) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        _apply_config_file(args, argv)
        return _COMMANDS[args.subcommand](args)
    except ConfigurationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except VerificationFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VERIFY
    except NumericError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except LabelVarError as exc:  # fallback for future error kinds
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


def main() -> None:
    sys.exit(run_command(sys.argv[1:]))


if __name__ == "__main__":
    main()
