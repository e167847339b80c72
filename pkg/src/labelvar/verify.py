"""Randomized verification suites for the core results: gradient exactness,
loss degeneracies, the Jensen-gap bounds, the weight-norm lower bound, and
the loss lower-bound certificates.

Each suite returns a :class:`SuiteReport`; ``require`` turns a failing report
into a :class:`VerificationFailure` for callers that want an exception.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .diagnostics import (
    jensen_gap_check,
    ls_lower_bound_certificate,
    mixup_lower_bound_certificate,
    weight_norm_split,
)
from .errors import ConfigurationError, VerificationFailure
from .losses import (
    FiniteDistribution,
    LambdaGrid,
    LossSpec,
    MixedTargets,
    MixingDistribution,
    batch_loss_grad,
    opt_ls_value,
    opt_mixup_value,
    quadrature,
)
from .models import LinearBinaryModel
from .optim import gd_full_batch_l2, max_margin_solve

SUITES = ("gradients", "degeneracies", "jensen-gap", "norm-bound", "certificates")

GRAD_REL_TOL = 1e-6
DEGENERACY_TOL = 1e-12
OPT_SLACK_TOL = 1e-6


@dataclass
class SuiteReport:
    suite: str
    total: int = 0
    passed: int = 0
    failures: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.total > 0 and not self.failures

    def record(self, ok: bool, message: str):
        self.total += 1
        if ok:
            self.passed += 1
        else:
            self.failures.append(message)

    def summary(self) -> str:
        status = "PASS" if self.ok else "FAIL"
        return f"{self.suite}: {status} ({self.passed}/{self.total} checks)"


def require(report: SuiteReport) -> SuiteReport:
    if not report.ok:
        detail = "; ".join(report.failures[:5])
        raise VerificationFailure(f"{report.summary()} -- {detail}")
    return report


def _rel_err(a: np.ndarray, b: np.ndarray) -> float:
    denom = max(float(np.linalg.norm(b)), 1e-12)
    return float(np.linalg.norm(a - b)) / denom


def _fd_gradient(fn, logits: np.ndarray, h: float = 1e-6) -> np.ndarray:
    """Central finite differences of a scalar function of the logits."""
    grad = np.zeros_like(logits, dtype=np.float64)
    it = np.nditer(logits, flags=["multi_index"])
    while not it.finished:
        idx = it.multi_index
        bump = np.zeros_like(logits, dtype=np.float64)
        bump[idx] = h
        grad[idx] = (fn(logits + bump) - fn(logits - bump)) / (2.0 * h)
        it.iternext()
    return grad


def run_gradient_suite(n_instances: int = 100, seed: int = 0) -> SuiteReport:
    """Analytic logit gradients vs central finite differences, all loss kinds,
    binary and 10-class batches."""
    report = SuiteReport("gradients")
    rng = np.random.default_rng(seed)
    specs = [
        ("ce", LossSpec.ce(), None),
        ("ls(0.1)", LossSpec.label_smoothing(0.1), None),
        ("ls(0.5)", LossSpec.label_smoothing(0.5), None),
        ("mixup(0.25)", LossSpec.mixup(MixingDistribution.point_mass(0.25)), 0.25),
        ("mixup(0.5)", LossSpec.mixup(MixingDistribution.point_mass(0.5)), 0.5),
    ]
    for i in range(n_instances):
        name, spec, lam = specs[i % len(specs)]
        n = int(rng.integers(2, 9))
        for k in (2, 10):
            if k == 2:
                logits = rng.normal(scale=2.0, size=n)
                y = rng.choice([-1, 1], size=n)
                if spec.kind == "mixup":
                    targets = MixedTargets(y1=y, y2=rng.choice([-1, 1], size=n), lam=lam)
                else:
                    targets = y
            else:
                logits = rng.normal(scale=2.0, size=(n, k))
                y = rng.integers(0, k, size=n)
                if spec.kind == "mixup":
                    targets = MixedTargets(y1=y, y2=rng.integers(0, k, size=n), lam=lam)
                else:
                    targets = y
            _, grad = batch_loss_grad(logits, targets, spec)
            fd = _fd_gradient(lambda s: batch_loss_grad(s, targets, spec)[0], logits)
            err = _rel_err(grad, fd)
            report.record(err <= GRAD_REL_TOL,
                          f"instance {i} k={k} {name}: gradient rel err {err:.2e}")
    return report


def run_degeneracy_suite(n_instances: int = 100, seed: int = 1) -> SuiteReport:
    """Zero smoothing and a point mass at lambda = 1 must reproduce plain
    cross-entropy exactly."""
    report = SuiteReport("degeneracies")
    rng = np.random.default_rng(seed)
    ce = LossSpec.ce()
    ls0 = LossSpec.label_smoothing(0.0)
    mix1 = LossSpec.mixup(MixingDistribution.point_mass(1.0))
    for i in range(n_instances):
        n = int(rng.integers(2, 17))
        for k in (2, 10):
            if k == 2:
                logits = rng.normal(scale=3.0, size=n)
                y = rng.choice([-1, 1], size=n)
            else:
                logits = rng.normal(scale=3.0, size=(n, k))
                y = rng.integers(0, k, size=n)
            l_ce, g_ce = batch_loss_grad(logits, y, ce)
            l_ls, g_ls = batch_loss_grad(logits, y, ls0)
            mixed = MixedTargets(y1=y, y2=(rng.choice([-1, 1], size=n) if k == 2
                                           else rng.integers(0, k, size=n)), lam=1.0)
            l_mx, g_mx = batch_loss_grad(logits, mixed, mix1)
            ls_err = max(abs(l_ls - l_ce), float(np.abs(g_ls - g_ce).max()))
            mx_err = max(abs(l_mx - l_ce), float(np.abs(g_mx - g_ce).max()))
            report.record(ls_err <= DEGENERACY_TOL,
                          f"instance {i} k={k}: zero-smoothing deviation {ls_err:.2e}")
            report.record(mx_err <= DEGENERACY_TOL,
                          f"instance {i} k={k}: lambda=1 mixing deviation {mx_err:.2e}")
    return report


def _random_jensen_instance(rng: np.random.Generator):
    """A convex function with certified second-derivative bounds on an
    interval, plus a finite distribution supported inside it."""
    kind = rng.integers(0, 3)
    m = int(rng.integers(2, 12))
    if kind == 0:
        # quadratic a x^2 + b x + c: gap is exactly a * Var(X)
        a = float(rng.uniform(0.1, 5.0))
        b = float(rng.normal())
        c = float(rng.normal())
        phi = lambda x: a * x ** 2 + b * x + c
        gamma1 = gamma2 = 2.0 * a
        x = rng.uniform(-3.0, 3.0, size=m)
    elif kind == 1:
        # exp on [lo, hi]: second derivative in [e^lo, e^hi]
        lo, hi = sorted(rng.uniform(-2.0, 2.0, size=2))
        hi = max(hi, lo + 0.1)
        phi = np.exp
        gamma1, gamma2 = float(np.exp(lo)), float(np.exp(hi))
        x = rng.uniform(lo, hi, size=m)
    else:
        # softplus on [lo, hi]: second derivative sig(x)(1 - sig(x))
        lo, hi = sorted(rng.uniform(-4.0, 4.0, size=2))
        hi = max(hi, lo + 0.1)
        phi = lambda x: np.logaddexp(0.0, x)
        sig = lambda v: 1.0 / (1.0 + np.exp(-v))
        curv = lambda v: sig(v) * (1.0 - sig(v))
        if lo <= 0.0 <= hi:
            gamma2 = 0.25
        else:
            gamma2 = max(curv(lo), curv(hi))
        gamma1 = min(curv(lo), curv(hi))
        x = rng.uniform(lo, hi, size=m)
    probs = rng.dirichlet(np.ones(m))
    labels = np.ones(m, dtype=np.int64)
    labels[0] = -1  # class-mass invariant of the container; unused by the check
    dist = FiniteDistribution(points=x[:, None], labels=labels, probs=probs)
    return phi, gamma1, gamma2, dist, kind == 0


def run_jensen_suite(n_instances: int = 1000, seed: int = 2) -> SuiteReport:
    """Jensen-gap bounds on randomized certified instances; quadratics must
    achieve the gap exactly."""
    report = SuiteReport("jensen-gap")
    rng = np.random.default_rng(seed)
    for i in range(n_instances):
        phi, gamma1, gamma2, dist, exact = _random_jensen_instance(rng)
        res = jensen_gap_check(phi, gamma1, gamma2, dist)
        report.record(res.passed,
                      f"instance {i}: gap {res.gap:.3e} outside "
                      f"[{res.lower:.3e}, {res.upper:.3e}]")
        if exact:
            # equality case: both bounds coincide with the gap
            tight = abs(res.gap - res.lower) <= 1e-8 * max(1.0, abs(res.gap))
            report.record(tight, f"instance {i}: quadratic gap not tight")
    return report


def _assumption_dataset(d: int, n: int, seed: int):
    """Dataset with one exactly-constant low-variance dimension (0.05 * y)
    and d-1 high-variance dimensions Uniform([y, 10y])."""
    rng = np.random.default_rng(seed)
    y = rng.choice([-1, 1], size=n)
    x = rng.uniform(1.0, 10.0, size=(n, d)) * y[:, None]
    x[:, 0] = 0.05 * y
    from .data import Dataset
    return Dataset(features=x, labels=y, k=2, low_var_dims=frozenset({0}),
                   name=f"assumption32(d={d},n={n},seed={seed})")


def run_norm_bound_suite(n_datasets: int = 20, seed: int = 3,
                         betas=(1e-3, 1e-2, 1e-1)) -> SuiteReport:
    """Both the converged explicit-L2 solution and the max-margin solution
    must put at least half their squared norm on the high-variance dims."""
    report = SuiteReport("norm-bound")
    rng = np.random.default_rng(seed)
    dims = (2, 4, 10)
    for i in range(n_datasets):
        d = dims[i % len(dims)]
        ds = _assumption_dataset(d, n=int(rng.integers(40, 200)),
                                 seed=int(rng.integers(2 ** 31)))
        for beta in betas:
            res = gd_full_batch_l2(LinearBinaryModel.zeros(d), ds,
                                   LossSpec.ce(l2_beta=beta))
            split = weight_norm_split(res.model.w, ds.low_var_dims)
            total = split.norm_low ** 2 + split.norm_high ** 2
            ok = res.converged and split.norm_high ** 2 >= 0.5 * total - 1e-12
            report.record(ok,
                          f"dataset {i} (d={d}) beta={beta}: "
                          f"high-dim share {split.norm_high ** 2 / max(total, 1e-300):.3f}"
                          + ("" if res.converged else " (GD not converged)"))
        w = max_margin_solve(ds)
        split = weight_norm_split(w, ds.low_var_dims)
        total = split.norm_low ** 2 + split.norm_high ** 2
        report.record(split.norm_high ** 2 >= 0.5 * total - 1e-12,
                      f"dataset {i} (d={d}) max-margin: "
                      f"high-dim share {split.norm_high ** 2 / max(total, 1e-300):.3f}")
    return report


def _random_finite_distribution(rng: np.random.Generator, k: int):
    m = int(rng.integers(max(k, 2), 9))
    d = int(rng.integers(1, 4))
    points = rng.normal(scale=2.0, size=(m, d))
    if k == 2:
        labels = rng.choice([-1, 1], size=m)
        labels[0], labels[1] = -1, 1  # both classes present
    else:
        labels = rng.integers(0, k, size=m)
        labels[:k] = np.arange(k)
    probs = rng.dirichlet(np.ones(m))
    probs = np.maximum(probs, 1e-3)
    probs = probs / probs.sum()
    return FiniteDistribution(points=points, labels=labels, probs=probs, k=k)


def _random_simplex_predictor(rng: np.random.Generator, k: int):
    """Deterministic pseudo-random simplex outputs keyed by the input row."""
    anchor = rng.normal(size=(k, 8))

    def g(x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(x)
        feats = np.concatenate([x, np.ones((x.shape[0], 1))], axis=1)
        proj = np.sin(feats @ rng_matrix[: feats.shape[1]])
        logits = proj @ anchor.T
        e = np.exp(logits - logits.max(axis=1, keepdims=True))
        return e / e.sum(axis=1, keepdims=True)

    rng_matrix = rng.normal(size=(5, 8))
    return g


def _ls_group_optimal_outputs(pi: FiniteDistribution, alpha: float, k: int) -> np.ndarray:
    out = np.full((pi.m, k), alpha / k)
    out[np.arange(pi.m), pi.class_indices] += 1.0 - alpha
    return out


def _mixup_group_optimal_predictor(pi: FiniteDistribution, grid: LambdaGrid):
    """Predicts the mass-weighted mean target of each coincident mixed point."""
    from .losses import COINCIDENCE_DECIMALS

    k = pi.k
    classes = pi.class_indices
    groups: dict[tuple, list] = {}
    for lam, weight in zip(grid.points, grid.weights):
        if weight == 0:
            continue
        for i in range(pi.m):
            for j in range(pi.m):
                mass = weight * pi.probs[i] * pi.probs[j]
                z = lam * pi.points[i] + (1.0 - lam) * pi.points[j]
                key = tuple(np.round(z, COINCIDENCE_DECIMALS))
                entry = groups.setdefault(key, [0.0, np.zeros(k)])
                entry[0] += mass
                target = np.zeros(k)
                target[classes[i]] += lam
                target[classes[j]] += 1.0 - lam
                entry[1] += mass * target

    def g(x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(x)
        out = np.empty((x.shape[0], k))
        for r, row in enumerate(x):
            key = tuple(np.round(row, COINCIDENCE_DECIMALS))
            if key not in groups:
                raise ConfigurationError("query outside the mixed support")
            mass, weighted = groups[key]
            out[r] = weighted / mass
        return out

    return g


def run_certificate_suite(n_instances: int = 200, seed: int = 4) -> SuiteReport:
    """Lower-bound certificates on randomized instances, plus tightness at the
    group-optimal predictor."""
    report = SuiteReport("certificates")
    rng = np.random.default_rng(seed)
    for i in range(n_instances):
        k = int(rng.choice([2, 2, 3, 5]))
        pi = _random_finite_distribution(rng, k)
        if i % 2 == 0:
            alpha = float(rng.uniform(0.05, 0.9))
            g = _random_simplex_predictor(rng, k)
            cert = ls_lower_bound_certificate(g(pi.points), pi, alpha, k)
            report.record(cert.satisfied,
                          f"instance {i}: smoothing certificate slack {cert.slack:.3e}")
            opt_out = _ls_group_optimal_outputs(pi, alpha, k)
            cert0 = ls_lower_bound_certificate(opt_out, pi, alpha, k)
            report.record(abs(cert0.slack) <= OPT_SLACK_TOL,
                          f"instance {i}: smoothing optimal slack {cert0.slack:.3e}")
        else:
            npts = int(rng.integers(2, 6))
            grid = LambdaGrid(
                points=rng.uniform(0.05, 0.95, size=npts),
                weights=rng.dirichlet(np.ones(npts)),
            )
            g = _random_simplex_predictor(rng, k)
            cert = mixup_lower_bound_certificate(g, pi, grid)
            report.record(cert.satisfied,
                          f"instance {i}: mixing certificate slack {cert.slack:.3e}")
            g0 = _mixup_group_optimal_predictor(pi, grid)
            cert0 = mixup_lower_bound_certificate(g0, pi, grid)
            report.record(abs(cert0.slack) <= OPT_SLACK_TOL,
                          f"instance {i}: mixing optimal slack {cert0.slack:.3e}")
    return report


_RUNNERS = {
    "gradients": run_gradient_suite,
    "degeneracies": run_degeneracy_suite,
    "jensen-gap": run_jensen_suite,
    "norm-bound": run_norm_bound_suite,
    "certificates": run_certificate_suite,
}


def run_suite(name: str, seed: int | None = None) -> SuiteReport:
    if name not in _RUNNERS:
        raise ConfigurationError(f"unknown suite {name!r}; expected one of {', '.join(SUITES)}")
    if seed is None:
        return _RUNNERS[name]()
    return _RUNNERS[name](seed=seed)
