"""Optimizers: AdamW with decoupled decay, deterministic full-batch gradient
descent with an explicit L2 penalty, and the hard-margin minimum-norm solver.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from cvxopt import matrix as cvx_matrix
from cvxopt import solvers as cvx_solvers
from scipy.optimize import linprog

from .data import Dataset
from .errors import ConfigurationError, NumericError
from .losses import FiniteDistribution, LambdaGrid, LossSpec, population_loss_grad
from .models import LinearBinaryModel, Model

cvx_solvers.options["show_progress"] = False

GD_MAX_STEPS = 1_000_000
GD_GRAD_TOL = 1e-8
MIXUP_PAIR_BUDGET = 4_000_000  # m^2 * grid size cap for exact mixup GD


class InfeasibilityError(NumericError):
    """The hard-margin problem has no feasible solution (non-separable data)."""


@dataclass(frozen=True)
class AdamWParams:
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    decoupled_wd: float = 0.0


@dataclass
class AdamWState:
    """First/second moment estimates keyed by parameter name."""

    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)
    t: int = 0

    @classmethod
    def init(cls, params: dict[str, np.ndarray]) -> "AdamWState":
        return cls(
            m={k: np.zeros_like(p) for k, p in params.items()},
            v={k: np.zeros_like(p) for k, p in params.items()},
            t=0,
        )


def adamw_step(params: dict[str, np.ndarray], grads: dict[str, np.ndarray],
               state: AdamWState, lr: float, hp: AdamWParams):
    """One in-place AdamW update: decoupled decay first, then the bias-corrected
    adaptive step."""
    state.t += 1
    bc1 = 1.0 - hp.beta1 ** state.t
    bc2 = 1.0 - hp.beta2 ** state.t
    for name, p in params.items():
        g = grads[name]
        if not np.all(np.isfinite(g)):
            raise NumericError(f"non-finite gradient for parameter {name!r}")
        if hp.decoupled_wd:
            p *= 1.0 - lr * hp.decoupled_wd
        m = state.m[name]
        v = state.v[name]
        m *= hp.beta1
        m += (1.0 - hp.beta1) * g
        v *= hp.beta2
        v += (1.0 - hp.beta2) * g * g
        p -= lr * (m / bc1) / (np.sqrt(v / bc2) + hp.eps)


@dataclass(frozen=True)
class GdResult:
    model: LinearBinaryModel
    loss: float
    grad_norm: float
    steps: int
    converged: bool


def _as_distribution(data) -> FiniteDistribution:
    if isinstance(data, Dataset):
        return FiniteDistribution.from_dataset(data)
    if isinstance(data, FiniteDistribution):
        return data
    raise ConfigurationError("expected a Dataset or FiniteDistribution")


def _lipschitz_bound(pi: FiniteDistribution, beta: float) -> float:
    """Upper bound on the loss Hessian: 0.25 * lmax(E[x x^T]) + beta.

    Valid for the mixup loss too: mixed second moments are dominated by the
    unmixed ones (convexity of the outer product)."""
    second = (pi.points * pi.probs[:, None]).T @ pi.points
    lmax = float(np.linalg.eigvalsh(second).max())
    return 0.25 * lmax + beta


def gd_full_batch_l2(
    model: LinearBinaryModel,
    data,
    spec: LossSpec,
    steps: int = GD_MAX_STEPS,
    lr: float | None = None,
    grad_tol: float = GD_GRAD_TOL,
    lambda_grid: LambdaGrid | None = None,
    accelerated: bool = True,
) -> GdResult:
    """Deterministic full-batch gradient descent on loss + (beta/2)*||w||^2.

    Step size defaults to 1/L with L a smoothness bound; Nesterov momentum
    with a function-value restart is on by default so that strongly convex
    instances reach tight gradient tolerances within the step budget.
    Stops at gradient norm <= ``grad_tol``; non-convergence is reported,
    divergence raises.
    """
    pi = _as_distribution(data)
    if not pi.binary:
        raise ConfigurationError("gd_full_batch_l2 requires binary data")
    if spec.kind == "mixup":
        if lambda_grid is None:
            raise ConfigurationError("mixup full-batch GD requires a lambda grid")
        if pi.m * pi.m * lambda_grid.points.size > MIXUP_PAIR_BUDGET:
            raise ConfigurationError(
                "support too large for exact mixup gradients; reduce m or the grid"
            )
    beta = spec.l2_beta
    if lr is None:
        lr = 1.0 / _lipschitz_bound(pi, beta)

    def loss_grad(w):
        loss, grad = population_loss_grad(w, pi, spec, lambda_grid)
        return loss + 0.5 * beta * float(w @ w), grad + beta * w

    w = model.w.copy()
    yv = w.copy()
    t_mom = 1.0
    loss, grad = loss_grad(w)
    initial_loss = loss
    grad_norm = float(np.linalg.norm(grad))
    step = 0
    while step < steps and grad_norm > grad_tol:
        step += 1
        if accelerated:
            _, grad_y = loss_grad(yv)
            w_next = yv - lr * grad_y
            new_loss, new_grad = loss_grad(w_next)
            if new_loss > loss:  # function restart
                t_next = 1.0
                w_next = w - lr * grad
                new_loss, new_grad = loss_grad(w_next)
            else:
                t_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t_mom * t_mom))
            yv = w_next + ((t_mom - 1.0) / t_next) * (w_next - w)
            t_mom = t_next
            w = w_next
        else:
            w = w - lr * grad
            new_loss, new_grad = loss_grad(w)
        if not np.isfinite(new_loss) or new_loss > 1e6 * max(1.0, abs(initial_loss)):
            raise NumericError(f"full-batch GD diverged at step {step} (loss={new_loss})")
        loss, grad = new_loss, new_grad
        grad_norm = float(np.linalg.norm(grad))
    return GdResult(
        model=LinearBinaryModel(w=w, bias=model.bias),
        loss=loss,
        grad_norm=grad_norm,
        steps=step,
        converged=grad_norm <= grad_tol,
    )


def _certify_separable(margins_matrix: np.ndarray):
    """LP check: maximize the margin under ||w||_inf <= 1.

    margins_matrix rows are y_i * x_i; non-separable data yields an optimal
    margin <= 0, which is the infeasibility certificate.
    """
    n, d = margins_matrix.shape
    # Variables: (w, delta); maximize delta s.t. (y_i x_i) . w >= delta.
    c = np.zeros(d + 1)
    c[-1] = -1.0
    a_ub = np.hstack([-margins_matrix, np.ones((n, 1))])
    b_ub = np.zeros(n)
    bounds = [(-1.0, 1.0)] * d + [(None, 1.0)]
    res = linprog(c, A_ub=a_ub, b_ub=b_ub, bounds=bounds, method="highs")
    if not res.success:
        raise NumericError(f"separability LP failed: {res.message}")
    best_margin = -res.fun
    if best_margin <= 1e-9:
        raise InfeasibilityError(
            f"data is not linearly separable (best achievable margin {best_margin:.3e} "
            "under a unit box constraint)"
        )


def max_margin_solve(ds: Dataset, tol: float = 1e-6) -> np.ndarray:
    """Minimum-norm w with y (w . x) >= 1 - tol on every row.

    Solved as a small dense QP after an LP separability certificate; a KKT
    audit verifies w lies in the span of the active constraint rows.
    """
    if not ds.binary:
        raise ConfigurationError("max_margin_solve requires binary data")
    yx = ds.features * ds.labels[:, None]
    _certify_separable(yx)
    n, d = yx.shape
    p_mat = cvx_matrix(np.eye(d))
    q_vec = cvx_matrix(np.zeros(d))
    g_mat = cvx_matrix(-yx)
    h_vec = cvx_matrix(-np.full(n, 1.0 - tol))
    sol = cvx_solvers.qp(p_mat, q_vec, g_mat, h_vec)
    if sol["status"] != "optimal":
        raise NumericError(f"hard-margin QP did not reach optimality: {sol['status']}")
    w = np.array(sol["x"]).ravel()
    margins = yx @ w
    if margins.min() < 1.0 - tol - 1e-6 * max(1.0, float(np.abs(margins).max())):
        raise NumericError("QP solution violates margin constraints beyond tolerance")
    duals = np.array(sol["z"]).ravel()
    active = (duals > 1e-6 * max(float(duals.max()), 1e-12)) | (margins <= margins.min() + 1e-6)
    if not np.any(active):
        active = margins <= margins.min() + 1e-6
    # Polish with an active-set iteration: rows with negative multipliers are
    # dropped, violated rows are added. The result lies in the span of its
    # active rows exactly (up to lstsq precision) and removes solver slack.
    idx = np.flatnonzero(active)
    w_polished = None
    for _ in range(200):
        a_act = yx[idx]
        coeff, *_ = np.linalg.lstsq(a_act @ a_act.T, np.full(idx.size, 1.0 - tol),
                                    rcond=None)
        if idx.size > 1 and coeff.min() < -1e-12:
            idx = np.delete(idx, int(np.argmin(coeff)))
            continue
        cand = a_act.T @ coeff
        cand_margins = yx @ cand
        worst = int(np.argmin(cand_margins))
        if cand_margins[worst] < 1.0 - tol - 1e-9 * max(1.0, float(np.abs(cand_margins).max())):
            if worst in idx:
                break  # numerically stuck; keep the QP solution
            idx = np.append(idx, worst)
            continue
        w_polished = cand
        break
    if w_polished is not None and np.linalg.norm(w_polished) <= np.linalg.norm(w) + 1e-9:
        w = w_polished
        active = np.zeros(n, dtype=bool)
        active[idx] = True
    a_act = yx[active]
    # KKT audit: w must be a combination of active-constraint rows.
    coeff, *_ = np.linalg.lstsq(a_act.T, w, rcond=None)
    residual = float(np.linalg.norm(a_act.T @ coeff - w))
    if residual > 1e-6 * max(float(np.linalg.norm(w)), 1e-12):
        raise NumericError(f"KKT audit failed: span residual {residual:.3e}")
    return w
