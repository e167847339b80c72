"""Decision-boundary experiment on the 2-D data: one high-variance
coordinate Uniform([y, 10y]) and one zero-variance coordinate 0.1y.

Models are trained to (near) stationarity with full-batch gradient descent
so the learned weights reflect the loss minimizers rather than the training
horizon. The Mixup population objective scales with the squared support
size, so its support is subsampled to keep exact gradients affordable.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .diagnostics import weight_norm_split
from .losses import LossSpec, MixingDistribution, quadrature
from .models import LinearBinaryModel
from .optim import gd_full_batch_l2
from .recipes import Boundary2DConfig, build_experiment
from .sweep import _derive_seeds

MIXUP_SUPPORT = 64
MIXUP_QUADRATURE = 17
GRAD_TOL = 1e-5
MAX_STEPS = 30_000


@dataclass(frozen=True)
class BoundarySetting:
    """One column of the three-way hyperparameter comparison."""

    name: str
    weight_decay: float
    ls_alpha: float
    mixup_alpha: float


SETTINGS = (
    BoundarySetting("canonical", 5e-4, 0.1, 1.0),
    BoundarySetting("scaled_1", 5e-3, 0.25, 2.0),
    BoundarySetting("scaled_2", 5e-2, 0.5, 4.0),
)


def _subsample(ds, m: int, seed: int):
    rng = np.random.default_rng(seed)
    idx = rng.choice(ds.n, size=m, replace=False)
    return replace(ds, features=ds.features[idx], labels=ds.labels[idx])


def train_boundary_model(setting: BoundarySetting, method: str,
                         seed: int = 0, seed_index: int = 0) -> tuple[LinearBinaryModel, float]:
    """Train one 2-D model; returns (model, |w_highvar| / |w_lowvar| ratio)."""
    data_seed, _, init_seed = _derive_seeds(seed, 0, seed_index, 11 * (seed_index + 1))
    exp = build_experiment("boundary2d", Boundary2DConfig(), data_seed,
                           init_seed=init_seed)
    train = exp.train
    grid = None
    if method == "weight_decay":
        spec = LossSpec.ce(l2_beta=setting.weight_decay)
    elif method == "label_smoothing":
        spec = LossSpec.label_smoothing(setting.ls_alpha)
    elif method == "mixup":
        spec = LossSpec.mixup(MixingDistribution.beta(setting.mixup_alpha,
                                                      setting.mixup_alpha))
        grid = quadrature(spec.mixing, npoints=MIXUP_QUADRATURE)
        train = _subsample(train, MIXUP_SUPPORT, data_seed + 7)
    else:
        raise ValueError(f"unknown method {method!r}")
    res = gd_full_batch_l2(exp.model, train, spec, steps=MAX_STEPS,
                           grad_tol=GRAD_TOL, lambda_grid=grid)
    split = weight_norm_split(res.model.w, exp.train.low_var_dims)
    return res.model, split.ratio_first


def boundary_ratios(setting: BoundarySetting, seed: int = 0,
                    n_seeds: int = 2) -> dict[str, float]:
    """Mean |w_highvar| / |w_lowvar| per method over ``n_seeds`` repetitions."""
    out = {}
    for method in ("weight_decay", "label_smoothing", "mixup"):
        ratios = [train_boundary_model(setting, method, seed=seed, seed_index=si)[1]
                  for si in range(n_seeds)]
        out[method] = float(np.mean(ratios))
    return out
