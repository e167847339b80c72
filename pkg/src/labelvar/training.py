"""Mini-batch AdamW training loop with diagnostic capture.

One mixing weight is drawn per batch and pairing uses a uniform random
permutation of the batch, matching common Mixup practice. All randomness
flows from the config seed, so runs are bit-reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .data import Dataset
from .diagnostics import (
    per_class_total_variance,
    target_class_output_variance,
    weight_norm_split,
)
from .errors import ConfigurationError, NumericError
from .losses import LossSpec, mix_pairs, sample_lambda
from .models import (
    LinearBinaryModel,
    MlpModel,
    Model,
    clone_model,
    forward,
    hidden_activations,
    model_loss_grad,
    predict_error,
    predict_proba,
)
from .optim import AdamWParams, AdamWState, adamw_step


@dataclass(frozen=True)
class TrainConfig:
    epochs: int
    batch_size: int
    learning_rate: float
    adamw: AdamWParams = field(default_factory=AdamWParams)
    seed: int = 0
    diagnostics_every: int = 1

    def validate(self):
        if self.epochs < 0:
            raise ConfigurationError("epochs must be >= 0")
        if self.batch_size < 1:
            raise ConfigurationError("batch_size must be >= 1")
        if not self.learning_rate > 0:
            raise ConfigurationError("learning_rate must be > 0")
        if self.diagnostics_every < 1:
            raise ConfigurationError("diagnostics_every must be >= 1")


@dataclass(frozen=True)
class DiagnosticsSample:
    epoch: int
    test_error: float
    output_variance: float
    target_output_variance: float
    norm_low: float
    norm_high: float
    ratio_first: float
    activation_variance: float | None = None


@dataclass
class TrainReport:
    """Per-epoch series plus diagnostics sampled at a configurable stride."""

    train_loss: list[float] = field(default_factory=list)
    test_error: list[float] = field(default_factory=list)
    diagnostics: list[DiagnosticsSample] = field(default_factory=list)
    model: Model | None = None


def _weight_vector(model: Model) -> np.ndarray:
    """Flat weight view used for the norm-split diagnostic (input weights)."""
    if isinstance(model, LinearBinaryModel):
        return model.w
    if isinstance(model, MlpModel):
        # Column norms of W1 measure how much each input dimension is used.
        return np.linalg.norm(model.w1, axis=0)
    return np.linalg.norm(model.weight, axis=0)


def _sample_diagnostics(model: Model, test: Dataset, low_dims, epoch: int) -> DiagnosticsSample:
    probs = predict_proba(model, test.features)
    labels = test.labels
    if test.binary:
        class_labels = ((labels + 1) // 2).astype(np.int64)
    else:
        class_labels = labels
    output_var = per_class_total_variance(probs, class_labels).per_class_total_variance
    target_var = target_class_output_variance(probs, class_labels)
    activation_var = None
    if isinstance(model, MlpModel):
        hidden = hidden_activations(model, test.features)
        activation_var = per_class_total_variance(hidden, class_labels).per_class_total_variance
    split = weight_norm_split(_weight_vector(model), low_dims)
    return DiagnosticsSample(
        epoch=epoch,
        test_error=predict_error(model, test.features, labels),
        output_variance=output_var,
        target_output_variance=target_var,
        norm_low=split.norm_low,
        norm_high=split.norm_high,
        ratio_first=split.ratio_first,
        activation_variance=activation_var,
    )


def fit(model: Model, train: Dataset, test: Dataset, spec: LossSpec,
        cfg: TrainConfig) -> TrainReport:
    """Train a copy of ``model`` and return the report with the final model.

    The input model is left untouched. The explicit L2 coefficient of the
    loss spec (if any) is added to the weight gradients; AdamW's decoupled
    decay comes from the optimizer config and is a separate mechanism.
    """
    cfg.validate()
    if train.d != test.d:
        raise ConfigurationError("train/test dimensionality mismatch")
    if train.d != model.d:
        raise ConfigurationError("model dimensionality does not match the data")
    model = clone_model(model)
    params = model.params()
    state = AdamWState.init(params)
    rng = np.random.default_rng(cfg.seed)
    low_dims = train.low_var_dims
    multiclass_targets = not train.binary or not isinstance(model, LinearBinaryModel)

    report = TrainReport()
    report.diagnostics.append(_sample_diagnostics(model, test, low_dims, epoch=0))

    n = train.n
    for epoch in range(cfg.epochs):
        perm = rng.permutation(n)
        epoch_losses = []
        for start in range(0, n, cfg.batch_size):
            idx = perm[start:start + cfg.batch_size]
            xb = train.features[idx]
            yb = train.labels[idx]
            if multiclass_targets and train.binary:
                yb = ((yb + 1) // 2).astype(np.int64)
            if spec.kind == "mixup":
                lam = sample_lambda(spec.mixing, rng)
                pair = rng.permutation(idx.size)
                batch = mix_pairs((xb, yb), (xb[pair], yb[pair]), lam)
                xb, targets = batch.features, batch.targets
            else:
                targets = yb
            try:
                loss, grads = model_loss_grad(model, xb, targets, spec)
            except NumericError as exc:
                raise NumericError(f"numeric failure at epoch {epoch}: {exc}") from exc
            if not np.isfinite(loss):
                raise NumericError(f"non-finite training loss at epoch {epoch}")
            if spec.l2_beta:
                for name in grads:
                    if name.startswith("w"):
                        grads[name] = grads[name] + spec.l2_beta * params[name]
            adamw_step(params, grads, state, cfg.learning_rate, cfg.adamw)
            epoch_losses.append(loss)
        report.train_loss.append(float(np.mean(epoch_losses)))
        report.test_error.append(predict_error(model, test.features, test.labels))
        if (epoch + 1) % cfg.diagnostics_every == 0 or epoch == cfg.epochs - 1:
            report.diagnostics.append(_sample_diagnostics(model, test, low_dims, epoch=epoch + 1))
    report.model = model
    return report
