"""Numerical laboratory for label-augmented training objectives.

Studies how label smoothing and Mixup concentrate linear and small-MLP
classifiers on low-variance features, with executable checks of the
associated weight-norm and loss-lower-bound results.
"""

__version__ = "0.1.0"

from .data import Dataset, ImageDataset, SyntheticConfig
from .losses import FiniteDistribution, LambdaGrid, LossSpec, MixingDistribution
from .models import LinearBinaryModel, MlpModel, SoftmaxLinearModel
from .optim import AdamWParams, gd_full_batch_l2, max_margin_solve
from .recipes import RECIPE_DEFAULTS, build_experiment
from .sweep import SweepConfig, aggregate_and_write, plan_grid, run_sweep
from .training import TrainConfig, TrainReport, fit
from .verify import SUITES, SuiteReport, run_suite

__all__ = [
    "Dataset",
    "ImageDataset",
    "SyntheticConfig",
    "FiniteDistribution",
    "LambdaGrid",
    "LossSpec",
    "MixingDistribution",
    "LinearBinaryModel",
    "MlpModel",
    "SoftmaxLinearModel",
    "AdamWParams",
    "gd_full_batch_l2",
    "max_margin_solve",
    "RECIPE_DEFAULTS",
    "build_experiment",
    "SweepConfig",
    "aggregate_and_write",
    "plan_grid",
    "run_sweep",
    "TrainConfig",
    "TrainReport",
    "fit",
    "SUITES",
    "SuiteReport",
    "run_suite",
]
