"""Variance metrics, weight-norm decompositions, the Jensen-gap verifier, and
the lower-bound certificates for the label-smoothing / Mixup losses.

All covariances are population covariances (divide by the count / total
mass), matching the population-level quantities the certificates bound.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, asdict
from typing import Callable

import numpy as np

from .errors import ConfigurationError, NumericError
from .losses import (
    FiniteDistribution,
    LambdaGrid,
    _log_clamped,
    opt_ls_value,
    opt_mixup_value,
)
from .models import LinearBinaryModel, Model, predict_proba

CERT_TOL = 1e-9
SIMPLEX_TOL = 1e-9


@dataclass(frozen=True)
class VarianceReport:
    """Class-averaged total variance with an optional per-class breakdown."""

    per_class_total_variance: float
    per_class_breakdown: tuple[tuple[int, int, float], ...]  # (label, count, trace)
    target_output_variance: float | None = None

    def to_json(self) -> str:
        return json.dumps(asdict(self))


def per_class_total_variance(vectors: np.ndarray, labels: np.ndarray) -> VarianceReport:
    """Mean over classes of the trace of the population class covariance."""
    vectors = np.atleast_2d(np.asarray(vectors, dtype=np.float64))
    labels = np.asarray(labels)
    if labels.shape != (vectors.shape[0],):
        raise ConfigurationError("labels must have one entry per row")
    classes = np.unique(labels)
    breakdown = []
    for y in classes:
        block = vectors[labels == y]
        if block.shape[0] == 0:
            raise ConfigurationError(f"class {y} has no samples")
        centered = block - block.mean(axis=0)
        trace = float((centered ** 2).sum() / block.shape[0])
        breakdown.append((int(y), block.shape[0], trace))
    mean_trace = float(np.mean([b[2] for b in breakdown]))
    return VarianceReport(
        per_class_total_variance=mean_trace,
        per_class_breakdown=tuple(breakdown),
    )


def target_class_output_variance(probs: np.ndarray, labels: np.ndarray) -> float:
    """Class-averaged variance of the probability assigned to the true class."""
    probs = np.atleast_2d(np.asarray(probs, dtype=np.float64))
    labels = np.asarray(labels, dtype=np.int64)
    if labels.shape != (probs.shape[0],):
        raise ConfigurationError("labels must have one entry per row")
    row_sums = probs.sum(axis=1)
    if np.any(np.abs(row_sums - 1.0) > SIMPLEX_TOL) or np.any(probs < -SIMPLEX_TOL):
        raise NumericError("probability rows must lie on the simplex (tolerance 1e-9)")
    variances = []
    for y in np.unique(labels):
        vals = probs[labels == y, y]
        variances.append(float(vals.var()))
    return float(np.mean(variances))


@dataclass(frozen=True)
class WeightNormSplit:
    norm_low: float
    norm_high: float
    ratio_first: float
    ratio_first_infinite: bool = False


def weight_norm_split(w: np.ndarray, low_dims) -> WeightNormSplit:
    """||w_L||, ||w_H||, and |w_0| / ||w_rest|| (infinity-flagged on zero rest)."""
    w = np.asarray(w, dtype=np.float64)
    low = sorted(int(i) for i in low_dims)
    if any(i < 0 or i >= w.size for i in low):
        raise ConfigurationError("low-variance index out of range")
    mask = np.zeros(w.size, dtype=bool)
    mask[low] = True
    norm_low = float(np.linalg.norm(w[mask]))
    norm_high = float(np.linalg.norm(w[~mask]))
    rest = float(np.linalg.norm(w[1:]))
    if rest == 0.0:
        return WeightNormSplit(norm_low, norm_high, math.inf, ratio_first_infinite=True)
    return WeightNormSplit(norm_low, norm_high, abs(float(w[0])) / rest)


@dataclass(frozen=True)
class JensenGapResult:
    gap: float
    lower: float
    upper: float
    variance: float
    passed: bool


def jensen_gap_check(
    phi: Callable[[np.ndarray], np.ndarray],
    gamma1: float,
    gamma2: float,
    dist: FiniteDistribution,
) -> JensenGapResult:
    """Check gamma1/2 * Var(X) <= E[phi(X)] - phi(E[X]) <= gamma2/2 * Var(X).

    ``dist`` must be supported on the reals (1-D points); gamma1 <= gamma2
    are the second-derivative bounds of phi on the support's convex hull.
    """
    if dist.d != 1:
        raise ConfigurationError("jensen_gap_check expects a distribution over the reals")
    if gamma1 > gamma2:
        raise ConfigurationError("gamma1 must not exceed gamma2")
    x = dist.points[:, 0]
    p = dist.probs
    mean = float(p @ x)
    variance = float(p @ (x - mean) ** 2)
    values = np.asarray(phi(x), dtype=np.float64)
    if values.shape != x.shape or not np.all(np.isfinite(values)):
        raise ConfigurationError("phi must map support values to finite reals")
    gap = float(p @ values) - float(np.asarray(phi(np.array([mean])))[0])
    lower = 0.5 * gamma1 * variance
    upper = 0.5 * gamma2 * variance
    passed = (gap >= lower - 1e-10) and (gap <= upper + 1e-10)
    return JensenGapResult(gap=gap, lower=lower, upper=upper, variance=variance, passed=passed)


@dataclass(frozen=True)
class Certificate:
    """Record of one lower-bound check: loss >= opt + C * variance_term."""

    loss_value: float
    opt_value: float
    constant_c: float
    variance_term: float
    satisfied: bool
    slack: float

    def to_json(self) -> str:
        return json.dumps(asdict(self))


def _make_certificate(loss_value, opt_value, constant_c, variance_term) -> Certificate:
    slack = loss_value - opt_value - constant_c * variance_term
    return Certificate(
        loss_value=float(loss_value),
        opt_value=float(opt_value),
        constant_c=float(constant_c),
        variance_term=float(variance_term),
        satisfied=bool(slack >= -CERT_TOL),
        slack=float(slack),
    )


def _check_simplex(outputs: np.ndarray):
    if np.any(outputs < -SIMPLEX_TOL) or np.any(np.abs(outputs.sum(axis=1) - 1.0) > SIMPLEX_TOL):
        raise NumericError("predictions must lie on the probability simplex")


def _weighted_trace_cov(values: np.ndarray, weights: np.ndarray) -> float:
    total = weights.sum()
    mean = (weights[:, None] * values).sum(axis=0) / total
    return float((weights[:, None] * (values - mean) ** 2).sum() / total)


def ls_lower_bound_certificate(
    g_outputs: np.ndarray,
    pi: FiniteDistribution,
    alpha: float,
    k: int,
    clamp_eps: float = 1e-12,
) -> Certificate:
    """Smoothed cross-entropy lower bound with C = alpha / (2k).

    ``g_outputs`` holds one simplex row per support point of ``pi``. The
    variance term is the class-mass weighted trace of the conditional output
    covariance.
    """
    g_outputs = np.atleast_2d(np.asarray(g_outputs, dtype=np.float64))
    if g_outputs.shape != (pi.m, k):
        raise ConfigurationError(f"expected predictions of shape {(pi.m, k)}")
    _check_simplex(g_outputs)
    if not (0.0 < alpha < 1.0):
        raise ConfigurationError("alpha must lie in (0, 1)")
    classes = pi.class_indices
    logp = _log_clamped(g_outputs, clamp_eps)
    per_point = -((1.0 - alpha) * logp[np.arange(pi.m), classes] + (alpha / k) * logp.sum(axis=1))
    loss_value = float(pi.probs @ per_point)
    opt_value = opt_ls_value(pi, alpha, k)
    variance_term = 0.0
    for y in np.unique(classes):
        mask = classes == y
        mass = float(pi.probs[mask].sum())
        variance_term += mass * _weighted_trace_cov(g_outputs[mask], pi.probs[mask])
    constant_c = alpha / (2.0 * k)
    return _make_certificate(loss_value, opt_value, constant_c, variance_term)


def mixup_lower_bound_certificate(
    predictor,
    pi: FiniteDistribution,
    lambda_grid: LambdaGrid,
    clamp_eps: float = 1e-12,
) -> Certificate:
    """Mixup lower bound with C = min over the grid of min(lam, 1-lam) / (2k).

    ``predictor`` is either a model or a callable mapping an (n, d) matrix to
    simplex rows. The variance term pools, for every (y1, y2, lambda) cell,
    the conditional output covariance of the mixed points.
    """
    interior = (lambda_grid.points > 0) & (lambda_grid.points < 1)
    if np.any(~interior & (lambda_grid.weights > 0)):
        raise ConfigurationError("mixup certificate grid must not put weight on lambda in {0, 1}")
    if callable(predictor):
        g = predictor
    else:
        g = lambda x: predict_proba(predictor, x)
    k = pi.k
    classes = pi.class_indices
    class_values = np.unique(classes)
    class_mass = {int(y): float(pi.probs[classes == y].sum()) for y in class_values}
    cond_probs = {int(y): pi.probs[classes == y] / class_mass[int(y)] for y in class_values}
    cond_points = {int(y): pi.points[classes == y] for y in class_values}

    loss_value = 0.0
    variance_term = 0.0
    active = lambda_grid.weights > 0
    for lam, wlam in zip(lambda_grid.points[active], lambda_grid.weights[active]):
        for y1 in class_values:
            for y2 in class_values:
                p1 = cond_probs[int(y1)]
                p2 = cond_probs[int(y2)]
                x1 = cond_points[int(y1)]
                x2 = cond_points[int(y2)]
                z = lam * x1[:, None, :] + (1.0 - lam) * x2[None, :, :]
                z = z.reshape(-1, pi.d)
                weights = np.outer(p1, p2).ravel()
                outputs = np.atleast_2d(np.asarray(g(z), dtype=np.float64))
                if outputs.shape != (z.shape[0], k):
                    raise ConfigurationError("predictor must return one simplex row per input")
                _check_simplex(outputs)
                logp = _log_clamped(outputs, clamp_eps)
                cell_loss = -(lam * logp[:, int(y1)] + (1.0 - lam) * logp[:, int(y2)])
                cell_mass = class_mass[int(y1)] * class_mass[int(y2)] * wlam
                loss_value += cell_mass * float(weights @ cell_loss)
                variance_term += cell_mass * _weighted_trace_cov(outputs, weights)
    opt_value = opt_mixup_value(pi, lambda_grid)
    lam_active = lambda_grid.points[active]
    constant_c = float(np.min(np.minimum(lam_active, 1.0 - lam_active))) / (2.0 * k)
    return _make_certificate(loss_value, opt_value, constant_c, variance_term)


@dataclass(frozen=True)
class BoundaryGrid:
    """Row-major grid of P(y = +1) over a rectangle, plus the boundary angle."""

    xs: np.ndarray
    ys: np.ndarray
    probs: np.ndarray  # shape (len(ys), len(xs))
    angle_degrees: float | None

    def export_csv(self, path):
        with open(path, "w", newline="") as f:
            f.write("x,y,p\n")
            for i, yv in enumerate(self.ys):
                for j, xv in enumerate(self.xs):
                    f.write(f"{xv:.17g},{yv:.17g},{self.probs[i, j]:.17g}\n")


def boundary_grid(model: Model, region: tuple[float, float, float, float],
                  resolution: int) -> BoundaryGrid:
    """Evaluate P(y = +1) of a 2-D binary model on a regular grid."""
    if model.d != 2:
        raise ConfigurationError("boundary_grid requires a 2-D model")
    x_min, x_max, y_min, y_max = region
    if not (x_min < x_max and y_min < y_max):
        raise ConfigurationError("region must satisfy x_min < x_max and y_min < y_max")
    if resolution < 2:
        raise ConfigurationError("resolution must be >= 2")
    xs = np.linspace(x_min, x_max, resolution)
    ys = np.linspace(y_min, y_max, resolution)
    xx, yy = np.meshgrid(xs, ys)
    points = np.column_stack([xx.ravel(), yy.ravel()])
    probs = predict_proba(model, points)[:, 1].reshape(resolution, resolution)
    angle = None
    if isinstance(model, LinearBinaryModel):
        angle = math.degrees(math.atan2(abs(model.w[1]), abs(model.w[0])))
    return BoundaryGrid(xs=xs, ys=ys, probs=probs, angle_degrees=angle)
