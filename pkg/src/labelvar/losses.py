"""Training objectives with exact gradients, population evaluators, and
closed-form / brute-force optimal values.

Binary losses are expressed through the margin z = y * (w . x) of a logistic
model; multiclass losses act on softmax logits. The L2 penalty is a model /
optimizer concern and is never added here.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import stats as sp_stats

from .data import Dataset
from .errors import ConfigurationError, DataFormatError, NumericError

DEFAULT_CLAMP_EPS = 1e-12
DEFAULT_QUADRATURE_POINTS = 129
COINCIDENCE_DECIMALS = 12  # mixed points closer than 1e-12 share a group


@dataclass(frozen=True)
class MixingDistribution:
    """Distribution on [0, 1] from which the pair-mixing weight is drawn."""

    kind: str  # "beta" | "point_mass" | "uniform"
    a: float = 1.0
    b: float = 1.0
    lam0: float = 1.0

    def __post_init__(self):
        if self.kind not in ("beta", "point_mass", "uniform"):
            raise ConfigurationError(f"unknown mixing distribution kind {self.kind!r}")
        if self.kind == "beta" and not (self.a > 0 and self.b > 0):
            raise ConfigurationError("Beta parameters must be positive")
        if self.kind == "point_mass" and not (0.0 <= self.lam0 <= 1.0):
            raise ConfigurationError("point mass location must lie in [0, 1]")

    @classmethod
    def beta(cls, a: float, b: float) -> "MixingDistribution":
        return cls(kind="beta", a=a, b=b)

    @classmethod
    def point_mass(cls, lam0: float) -> "MixingDistribution":
        return cls(kind="point_mass", lam0=lam0)

    @classmethod
    def uniform(cls) -> "MixingDistribution":
        return cls(kind="uniform")


def sample_lambda(dist: MixingDistribution, rng: np.random.Generator) -> float:
    """Draw one mixing weight. Beta draws go through two Gamma variates."""
    if dist.kind == "point_mass":
        return float(dist.lam0)
    if dist.kind == "uniform":
        return float(rng.random())
    g1 = rng.standard_gamma(dist.a)
    g2 = rng.standard_gamma(dist.b)
    return float(g1 / (g1 + g2))


@dataclass(frozen=True)
class LambdaGrid:
    """Discretized mixing distribution used by population evaluators."""

    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        points = np.asarray(self.points, dtype=np.float64)
        weights = np.asarray(self.weights, dtype=np.float64)
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "weights", weights)
        if points.shape != weights.shape or points.ndim != 1 or points.size == 0:
            raise ConfigurationError("grid points and weights must be equal-length 1-D arrays")
        if np.any(weights < 0) or abs(weights.sum() - 1.0) > 1e-9:
            raise ConfigurationError("grid weights must be nonnegative and sum to 1")
        if np.any(points < 0) or np.any(points > 1):
            raise ConfigurationError("grid points must lie in [0, 1]")

    @classmethod
    def point_mass(cls, lam: float) -> "LambdaGrid":
        return cls(points=np.array([lam]), weights=np.array([1.0]))

    def excludes_endpoints(self) -> bool:
        interior = (self.points > 0) & (self.points < 1)
        return bool(np.all(interior | (self.weights == 0)))


def quadrature(dist: MixingDistribution, npoints: int = DEFAULT_QUADRATURE_POINTS) -> LambdaGrid:
    """Bin-center grid on [0, 1] with density weights, renormalized.

    Bin centers keep the grid away from the exact endpoints, which the Mixup
    lower-bound certificate requires.
    """
    if dist.kind == "point_mass":
        return LambdaGrid.point_mass(dist.lam0)
    centers = (np.arange(npoints) + 0.5) / npoints
    if dist.kind == "uniform":
        weights = np.full(npoints, 1.0 / npoints)
    else:
        weights = sp_stats.beta.pdf(centers, dist.a, dist.b)
        weights = weights / weights.sum()
    return LambdaGrid(points=centers, weights=weights)


@dataclass(frozen=True)
class LossSpec:
    """Tagged choice of training objective.

    kind "ce" ignores alpha/mixing; "ls" uses alpha; "mixup" uses mixing.
    ``l2_beta`` is carried here but applied by the optimizer, not the loss.
    """

    kind: str  # "ce" | "ls" | "mixup"
    alpha: float = 0.0
    mixing: MixingDistribution = field(default_factory=lambda: MixingDistribution.point_mass(1.0))
    l2_beta: float = 0.0
    clamp_eps: float = DEFAULT_CLAMP_EPS

    def __post_init__(self):
        if self.kind not in ("ce", "ls", "mixup"):
            raise ConfigurationError(f"unknown loss kind {self.kind!r}")
        if not (0.0 <= self.alpha <= 1.0):
            raise ConfigurationError("alpha must lie in [0, 1]")
        if self.l2_beta < 0:
            raise ConfigurationError("l2_beta must be >= 0")
        if not (0.0 < self.clamp_eps < 0.5):
            raise ConfigurationError("clamp_eps must lie in (0, 0.5)")

    @classmethod
    def ce(cls, l2_beta: float = 0.0) -> "LossSpec":
        return cls(kind="ce", l2_beta=l2_beta)

    @classmethod
    def label_smoothing(cls, alpha: float, l2_beta: float = 0.0) -> "LossSpec":
        return cls(kind="ls", alpha=alpha, l2_beta=l2_beta)

    @classmethod
    def mixup(cls, mixing: MixingDistribution, l2_beta: float = 0.0) -> "LossSpec":
        return cls(kind="mixup", mixing=mixing, l2_beta=l2_beta)

    @property
    def effective_alpha(self) -> float:
        """Label smoothing weight; 0 for plain cross-entropy."""
        return self.alpha if self.kind == "ls" else 0.0


@dataclass(frozen=True)
class MixedTargets:
    """Pair targets (Y1, Y2, lambda) kept unmixed so the pair loss is exact."""

    y1: np.ndarray
    y2: np.ndarray
    lam: float

    def __post_init__(self):
        object.__setattr__(self, "y1", np.asarray(self.y1, dtype=np.int64))
        object.__setattr__(self, "y2", np.asarray(self.y2, dtype=np.int64))
        if self.y1.shape != self.y2.shape:
            raise ConfigurationError("mixed target halves must have equal shapes")
        if not (0.0 <= self.lam <= 1.0):
            raise ConfigurationError("lambda must lie in [0, 1]")


@dataclass(frozen=True)
class MixedBatch:
    features: np.ndarray
    targets: MixedTargets


def mix_pairs(batch: tuple[np.ndarray, np.ndarray],
              permuted: tuple[np.ndarray, np.ndarray],
              lam: float) -> MixedBatch:
    """Convex-combine two aligned batches with weight lam on the first."""
    x1, y1 = batch
    x2, y2 = permuted
    x1 = np.asarray(x1, dtype=np.float64)
    x2 = np.asarray(x2, dtype=np.float64)
    if x1.shape != x2.shape:
        raise ConfigurationError(f"batch shapes differ: {x1.shape} vs {x2.shape}")
    z = lam * x1 + (1.0 - lam) * x2
    return MixedBatch(features=z, targets=MixedTargets(y1=y1, y2=y2, lam=lam))


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z, dtype=np.float64)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _log_clamped(p: np.ndarray, eps: float) -> np.ndarray:
    return np.log(np.clip(p, eps, 1.0 - eps))


def _softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def _binary_pair_loss_grad(s, y1, y2, lam, eps):
    """Mean of -lam*log sig(y1 s) - (1-lam)*log sig(y2 s) and its s-gradient."""
    loss = -(lam * _log_clamped(_sigmoid(y1 * s), eps)
             + (1.0 - lam) * _log_clamped(_sigmoid(y2 * s), eps))
    grad = -(lam * y1 * _sigmoid(-y1 * s) + (1.0 - lam) * y2 * _sigmoid(-y2 * s))
    return float(loss.mean()), grad / s.size


def batch_loss_grad(logits: np.ndarray, targets, spec: LossSpec):
    """Mean loss over the batch and its exact gradient w.r.t. the logits.

    Binary mode: 1-D logits with targets either +-1 labels (ce / ls) or
    :class:`MixedTargets` (mixup). Multiclass mode: (n, k) logits with
    integer class labels or :class:`MixedTargets`.
    """
    logits = np.asarray(logits, dtype=np.float64)
    if not np.all(np.isfinite(logits)):
        raise NumericError("non-finite logits")
    eps = spec.clamp_eps

    if logits.ndim == 1:
        s = logits
        if spec.kind == "mixup":
            if not isinstance(targets, MixedTargets):
                raise ConfigurationError("mixup loss requires MixedTargets")
            return _binary_pair_loss_grad(s, targets.y1, targets.y2, targets.lam, eps)
        y = np.asarray(targets, dtype=np.float64)
        if y.shape != s.shape:
            raise ConfigurationError("labels must match logits shape")
        alpha = spec.effective_alpha
        z = y * s
        loss = -((1.0 - alpha / 2.0) * _log_clamped(_sigmoid(z), eps)
                 + (alpha / 2.0) * _log_clamped(_sigmoid(-z), eps))
        grad = y * (_sigmoid(z) - 1.0 + alpha / 2.0) / s.size
        return float(loss.mean()), grad

    if logits.ndim != 2:
        raise ConfigurationError("logits must be 1-D (binary) or 2-D (multiclass)")
    n, k = logits.shape
    p = _softmax(logits)
    if spec.kind == "mixup":
        if not isinstance(targets, MixedTargets):
            raise ConfigurationError("mixup loss requires MixedTargets")
        t = np.zeros((n, k))
        t[np.arange(n), targets.y1] += targets.lam
        t[np.arange(n), targets.y2] += 1.0 - targets.lam
    else:
        y = np.asarray(targets, dtype=np.int64)
        if y.shape != (n,):
            raise ConfigurationError("labels must have one entry per row")
        alpha = spec.effective_alpha
        t = np.full((n, k), alpha / k)
        t[np.arange(n), y] += 1.0 - alpha
    loss = float(-(t * _log_clamped(p, eps)).sum(axis=1).mean())
    grad = (p - t) / n
    return loss, grad


@dataclass(frozen=True)
class FiniteDistribution:
    """Discrete distribution over (point, label) pairs with explicit masses."""

    points: np.ndarray
    labels: np.ndarray
    probs: np.ndarray
    k: int = 2

    def __post_init__(self):
        points = np.atleast_2d(np.asarray(self.points, dtype=np.float64))
        labels = np.asarray(self.labels, dtype=np.int64)
        probs = np.asarray(self.probs, dtype=np.float64)
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "probs", probs)
        m = points.shape[0]
        if labels.shape != (m,) or probs.shape != (m,):
            raise ConfigurationError("labels and probs must have one entry per support point")
        if np.any(probs < 0) or abs(probs.sum() - 1.0) > 1e-12:
            raise ConfigurationError("probs must be nonnegative and sum to 1 within 1e-12")
        if self.binary:
            if not np.all(np.isin(labels, (-1, 1))):
                raise ConfigurationError("binary distributions require labels in {-1, +1}")
        elif labels.min() < 0 or labels.max() >= self.k:
            raise ConfigurationError(f"labels must lie in [0, {self.k})")
        for y in np.unique(labels):
            if probs[labels == y].sum() <= 0:
                raise ConfigurationError(f"class {y} has zero mass")

    @property
    def m(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]

    @property
    def binary(self) -> bool:
        return self.k == 2

    @property
    def class_indices(self) -> np.ndarray:
        """Labels mapped into [0, k): -1 -> 0, +1 -> 1 in binary mode."""
        if self.binary:
            return ((self.labels + 1) // 2).astype(np.int64)
        return self.labels

    def class_mass(self, y: int) -> float:
        return float(self.probs[self.labels == y].sum())

    @classmethod
    def from_dataset(cls, ds: Dataset) -> "FiniteDistribution":
        """Empirical distribution: every row gets mass 1/n."""
        return cls(
            points=ds.features, labels=ds.labels,
            probs=np.full(ds.n, 1.0 / ds.n), k=ds.k,
        )

    def export_csv(self, path):
        with open(path, "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow([f"x{i}" for i in range(self.d)] + ["label", "prob"])
            for row, label, prob in zip(self.points, self.labels, self.probs):
                writer.writerow([f"{v:.17g}" for v in row] + [str(int(label)), f"{prob:.17g}"])

    @classmethod
    def import_csv(cls, path, k: int = 2) -> "FiniteDistribution":
        with open(path, newline="") as f:
            reader = csv.reader(f)
            try:
                header = next(reader)
            except StopIteration:
                raise DataFormatError(f"{path}: empty CSV")
            if len(header) < 3 or header[-2:] != ["label", "prob"]:
                raise DataFormatError(f"{path}: expected trailing columns 'label,prob'")
            d = len(header) - 2
            points, labels, probs = [], [], []
            for i, row in enumerate(reader):
                if len(row) != d + 2:
                    raise DataFormatError(f"{path}: row {i} has {len(row)} fields, expected {d + 2}")
                points.append([float(v) for v in row[:d]])
                labels.append(int(row[d]))
                probs.append(float(row[d + 1]))
        if not points:
            raise DataFormatError(f"{path}: no data rows")
        return cls(points=np.array(points), labels=np.array(labels), probs=np.array(probs), k=k)


def population_loss(w: np.ndarray, pi: FiniteDistribution, spec: LossSpec,
                    lambda_grid: LambdaGrid | None = None) -> float:
    """Exact population loss of a bias-free linear binary model.

    CE / LS sum over the support; Mixup sums over all support pairs and
    integrates lambda over the supplied grid.
    """
    if not pi.binary:
        raise ConfigurationError("population_loss operates on binary distributions")
    w = np.asarray(w, dtype=np.float64)
    s = pi.points @ w
    y = pi.labels.astype(np.float64)
    eps = spec.clamp_eps
    if spec.kind in ("ce", "ls"):
        alpha = spec.effective_alpha
        z = y * s
        per_point = -((1.0 - alpha / 2.0) * _log_clamped(_sigmoid(z), eps)
                      + (alpha / 2.0) * _log_clamped(_sigmoid(-z), eps))
        return float(pi.probs @ per_point)
    if lambda_grid is None:
        raise ConfigurationError("mixup population loss requires a lambda grid")
    total = 0.0
    pair_mass = np.outer(pi.probs, pi.probs)
    for lam, weight in zip(lambda_grid.points, lambda_grid.weights):
        if weight == 0:
            continue
        s_mix = lam * s[:, None] + (1.0 - lam) * s[None, :]
        loss_ij = -(lam * _log_clamped(_sigmoid(y[:, None] * s_mix), eps)
                    + (1.0 - lam) * _log_clamped(_sigmoid(y[None, :] * s_mix), eps))
        total += weight * float((pair_mass * loss_ij).sum())
    return total


def population_loss_grad(w: np.ndarray, pi: FiniteDistribution, spec: LossSpec,
                         lambda_grid: LambdaGrid | None = None):
    """Population loss of a bias-free linear binary model and its w-gradient."""
    if not pi.binary:
        raise ConfigurationError("population_loss_grad operates on binary distributions")
    w = np.asarray(w, dtype=np.float64)
    s = pi.points @ w
    y = pi.labels.astype(np.float64)
    eps = spec.clamp_eps
    if spec.kind in ("ce", "ls"):
        alpha = spec.effective_alpha
        z = y * s
        per_point = -((1.0 - alpha / 2.0) * _log_clamped(_sigmoid(z), eps)
                      + (alpha / 2.0) * _log_clamped(_sigmoid(-z), eps))
        dl_ds = pi.probs * y * (_sigmoid(z) - 1.0 + alpha / 2.0)
        return float(pi.probs @ per_point), dl_ds @ pi.points
    if lambda_grid is None:
        raise ConfigurationError("mixup population gradient requires a lambda grid")
    total = 0.0
    grad = np.zeros_like(w)
    pair_mass = np.outer(pi.probs, pi.probs)
    for lam, weight in zip(lambda_grid.points, lambda_grid.weights):
        if weight == 0:
            continue
        s_mix = lam * s[:, None] + (1.0 - lam) * s[None, :]
        yi = y[:, None]
        yj = y[None, :]
        loss_ij = -(lam * _log_clamped(_sigmoid(yi * s_mix), eps)
                    + (1.0 - lam) * _log_clamped(_sigmoid(yj * s_mix), eps))
        dl_dsmix = -(lam * yi * _sigmoid(-yi * s_mix)
                     + (1.0 - lam) * yj * _sigmoid(-yj * s_mix))
        coeff = weight * pair_mass * dl_dsmix
        total += weight * float((pair_mass * loss_ij).sum())
        # d s_mix / d w = lam * x_i + (1 - lam) * x_j
        grad += lam * (coeff.sum(axis=1) @ pi.points)
        grad += (1.0 - lam) * (coeff.sum(axis=0) @ pi.points)
    return total, grad


def opt_ls_value(pi: FiniteDistribution, alpha: float, k: int) -> float:
    """Global minimum of the smoothed cross-entropy for deterministic labels.

    Requires distinct support points to each carry a single label; the
    optimum is then attained pointwise by predicting the smoothed target.
    """
    if not (0.0 < alpha < 1.0):
        raise ConfigurationError("alpha must lie in (0, 1)")
    seen: dict[tuple, int] = {}
    for row, label in zip(pi.points, pi.labels):
        key = tuple(np.round(row, COINCIDENCE_DECIMALS))
        if key in seen and seen[key] != label:
            raise ConfigurationError(
                "duplicate support point with conflicting labels; no closed-form optimum"
            )
        seen[key] = int(label)
    top = 1.0 - alpha + alpha / k
    rest = alpha / k
    return float(-(top * math.log(top) + (k - 1) * rest * math.log(rest)))


def _entropy(t: np.ndarray) -> float:
    nz = t[t > 0]
    return float(-(nz * np.log(nz)).sum())


def opt_mixup_value(pi: FiniteDistribution, lambda_grid: LambdaGrid) -> float:
    """Brute-force minimum of the population Mixup loss.

    Enumerates every mixed point over support pairs and grid lambdas, pools
    mass and targets across coincident mixed points (the optimal predictor is
    a function of the mixed input alone), and scores each group at its
    mass-weighted average target.
    """
    k = pi.k
    classes = pi.class_indices
    groups: dict[tuple, list] = {}
    for lam, weight in zip(lambda_grid.points, lambda_grid.weights):
        if weight == 0:
            continue
        for i in range(pi.m):
            for j in range(pi.m):
                mass = weight * pi.probs[i] * pi.probs[j]
                if mass == 0:
                    continue
                z = lam * pi.points[i] + (1.0 - lam) * pi.points[j]
                key = tuple(np.round(z, COINCIDENCE_DECIMALS))
                entry = groups.get(key)
                if entry is None:
                    entry = [0.0, np.zeros(k)]
                    groups[key] = entry
                entry[0] += mass
                target = np.zeros(k)
                target[classes[i]] += lam
                target[classes[j]] += 1.0 - lam
                entry[1] += mass * target
    total = 0.0
    for mass, weighted_target in groups.values():
        mean_target = weighted_target / mass
        total += mass * _entropy(mean_target)
    return total
