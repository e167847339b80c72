"""Hyperparameter grid execution over multiple seeds with deterministic
parallelism.

Every (grid value, seed) cell derives its RNG streams injectively from
(master seed, value index, seed index), so results are byte-identical no
matter how many workers run the sweep.
"""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ConfigurationError, LabelVarError
from .losses import LossSpec, MixingDistribution
from .optim import AdamWParams
from .recipes import RECIPE_DEFAULTS, RecipeConfig, build_experiment
from .training import TrainConfig, fit

METHODS = ("weight_decay", "label_smoothing", "mixup")
DEFAULT_SEEDS = (11, 22, 33, 44, 55)  # five runs, matching the reporting protocol

RAW_COLUMNS = [
    "value_index", "value", "seed_index", "seed", "status",
    "test_error", "train_loss", "norm_low", "norm_high", "ratio_first",
    "output_variance", "target_output_variance", "activation_variance",
    "error",
]


def plan_grid(method: str, lo: float, hi: float, count: int) -> list[float]:
    """Inclusive uniformly spaced grid of hyperparameter values."""
    if method not in METHODS:
        raise ConfigurationError(f"unknown method {method!r}")
    if lo > hi:
        raise ConfigurationError("lo must not exceed hi")
    if count < 1:
        raise ConfigurationError("count must be >= 1")
    if count == 1:
        return [float(lo)]
    return [float(v) for v in np.linspace(lo, hi, count)]


def method_settings(method: str, value: float) -> tuple[LossSpec, float]:
    """Map (method, grid value) to a loss spec and an AdamW decoupled decay.

    A mixup value of 0 means ERM (point mass on lambda = 1)."""
    if method == "weight_decay":
        return LossSpec.ce(), float(value)
    if method == "label_smoothing":
        if value == 0:
            return LossSpec.ce(), 0.0
        return LossSpec.label_smoothing(float(value)), 0.0
    if method == "mixup":
        if value == 0:
            return LossSpec.ce(), 0.0
        return LossSpec.mixup(MixingDistribution.beta(float(value), float(value))), 0.0
    raise ConfigurationError(f"unknown method {method!r}")


@dataclass(frozen=True)
class SweepConfig:
    method: str
    grid: tuple[float, ...]
    experiment: str
    train: TrainConfig
    data: RecipeConfig
    seeds: tuple[int, ...] = DEFAULT_SEEDS
    master_seed: int = 0

    def __post_init__(self):
        if self.method not in METHODS:
            raise ConfigurationError(f"unknown method {self.method!r}")
        if not self.grid:
            raise ConfigurationError("grid must be non-empty")
        if not self.seeds:
            raise ConfigurationError("seeds must be non-empty")
        object.__setattr__(self, "grid", tuple(float(v) for v in self.grid))
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))

    def to_dict(self) -> dict:
        doc = dataclasses.asdict(self)
        doc["data_type"] = type(self.data).__name__
        return doc

    def config_hash(self) -> str:
        return hashlib.sha256(
            json.dumps(self.to_dict(), sort_keys=True).encode()
        ).hexdigest()


@dataclass(frozen=True)
class CellResult:
    value_index: int
    value: float
    seed_index: int
    seed: int
    status: str  # "ok" | "failed"
    test_error: float = float("nan")
    train_loss: float = float("nan")
    norm_low: float = float("nan")
    norm_high: float = float("nan")
    ratio_first: float = float("nan")
    output_variance: float = float("nan")
    target_output_variance: float = float("nan")
    activation_variance: float = float("nan")
    error: str = ""


@dataclass(frozen=True)
class SweepResult:
    config: SweepConfig
    cells: tuple[CellResult, ...]

    def aggregate(self, metric: str) -> list[tuple[float, float, float]]:
        """(grid value, mean, std) over succeeded seeds, per grid value."""
        out = []
        for vi, value in enumerate(self.config.grid):
            vals = [getattr(c, metric) for c in self.cells
                    if c.value_index == vi and c.status == "ok"]
            arr = np.array(vals, dtype=np.float64)
            if arr.size:
                out.append((value, float(arr.mean()), float(arr.std())))
            else:
                out.append((value, float("nan"), float("nan")))
        return out


def _derive_seeds(master_seed: int, value_index: int, seed_index: int, seed: int):
    ss = np.random.SeedSequence([master_seed, value_index, seed_index, seed])
    data_seed, train_seed, init_seed = (int(s) for s in ss.generate_state(3))
    return data_seed, train_seed, init_seed


def _run_cell(cfg: SweepConfig, value_index: int, seed_index: int) -> CellResult:
    value = cfg.grid[value_index]
    seed = cfg.seeds[seed_index]
    data_seed, train_seed, init_seed = _derive_seeds(
        cfg.master_seed, value_index, seed_index, seed)
    try:
        spec, wd = method_settings(cfg.method, value)
        exp = build_experiment(cfg.experiment, cfg.data, data_seed, init_seed=init_seed)
        adamw = dataclasses.replace(cfg.train.adamw, decoupled_wd=wd)
        train_cfg = dataclasses.replace(cfg.train, adamw=adamw, seed=train_seed)
        report = fit(exp.model, exp.train, exp.test, spec, train_cfg)
        diag = report.diagnostics[-1]
        return CellResult(
            value_index=value_index, value=value, seed_index=seed_index, seed=seed,
            status="ok",
            test_error=report.test_error[-1] if report.test_error else diag.test_error,
            train_loss=report.train_loss[-1] if report.train_loss else float("nan"),
            norm_low=diag.norm_low, norm_high=diag.norm_high,
            ratio_first=diag.ratio_first,
            output_variance=diag.output_variance,
            target_output_variance=diag.target_output_variance,
            activation_variance=(float("nan") if diag.activation_variance is None
                                 else diag.activation_variance),
        )
    except LabelVarError as exc:
        return CellResult(
            value_index=value_index, value=value, seed_index=seed_index, seed=seed,
            status="failed", error=f"{type(exc).__name__}: {exc}",
        )


def run_sweep(cfg: SweepConfig, parallelism: int = 1) -> SweepResult:
    """Run every (grid value, seed) cell; failures are recorded per cell."""
    if parallelism < 1:
        raise ConfigurationError("parallelism must be >= 1")
    jobs = [(vi, si) for vi in range(len(cfg.grid)) for si in range(len(cfg.seeds))]
    if parallelism == 1:
        cells = [_run_cell(cfg, vi, si) for vi, si in jobs]
    else:
        with ProcessPoolExecutor(max_workers=parallelism) as pool:
            futures = [pool.submit(_run_cell, cfg, vi, si) for vi, si in jobs]
            cells = [f.result() for f in futures]
    return SweepResult(config=cfg, cells=tuple(cells))


def aggregate_and_write(result: SweepResult, out_dir) -> dict:
    """Write raw CSV, aggregate CSV, and a JSON manifest; return the manifest."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    raw_path = out_dir / "raw.csv"
    with open(raw_path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(RAW_COLUMNS)
        for c in result.cells:
            writer.writerow([
                c.value_index, f"{c.value:.17g}", c.seed_index, c.seed, c.status,
                f"{c.test_error:.17g}", f"{c.train_loss:.17g}",
                f"{c.norm_low:.17g}", f"{c.norm_high:.17g}", f"{c.ratio_first:.17g}",
                f"{c.output_variance:.17g}", f"{c.target_output_variance:.17g}",
                f"{c.activation_variance:.17g}", c.error,
            ])
    metrics = ["test_error", "norm_low", "norm_high", "ratio_first",
               "output_variance", "target_output_variance", "activation_variance"]
    agg_path = out_dir / "aggregate.csv"
    with open(agg_path, "w", newline="") as f:
        writer = csv.writer(f)
        header = ["value"]
        for m in metrics:
            header += [f"{m}_mean", f"{m}_std"]
        writer.writerow(header)
        per_metric = {m: result.aggregate(m) for m in metrics}
        for vi, value in enumerate(result.config.grid):
            row = [f"{value:.17g}"]
            for m in metrics:
                _, mean, std = per_metric[m][vi]
                row += [f"{mean:.17g}", f"{std:.17g}"]
            writer.writerow(row)
    manifest = {
        "tool_version": __version__,
        "config": result.config.to_dict(),
        "config_hash": result.config.config_hash(),
        "rng_scheme": "SeedSequence([master_seed, value_index, seed_index, seed]) -> "
                      "(data_seed, train_seed, init_seed)",
        "files": {"raw": raw_path.name, "aggregate": agg_path.name},
        "cells": len(result.cells),
        "failed_cells": sum(1 for c in result.cells if c.status != "ok"),
    }
    with open(out_dir / "manifest.json", "w") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
    return manifest
