"""AdamW step arithmetic, full-batch GD convergence, max-margin solver."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from labelvar.data import Dataset
from labelvar.errors import ConfigurationError, NumericError
from labelvar.losses import (
    FiniteDistribution,
    LambdaGrid,
    LossSpec,
    MixingDistribution,
    population_loss,
)
from labelvar.models import LinearBinaryModel
from labelvar.optim import (
    AdamWParams,
    AdamWState,
    InfeasibilityError,
    adamw_step,
    gd_full_batch_l2,
    max_margin_solve,
)

# Stationary margin of the 0.2-smoothed loss on symmetric unit points:
# sigma(z) = 0.9 at the optimum, so w* = log 9.
LS02_MARGIN = float(np.log(9.0))


class TestAdamWStep:
    def test_first_step_is_signed_lr(self):
        # With bias correction the first update is lr * g / (|g| + ~eps).
        params = {"w": np.array([0.0, 0.0])}
        grads = {"w": np.array([3.0, -0.5])}
        adamw_step(params, grads, AdamWState.init(params), lr=0.1, hp=AdamWParams())
        assert np.allclose(params["w"], [-0.1, 0.1], atol=1e-6)

    def test_two_known_steps(self):
        hp = AdamWParams(beta1=0.9, beta2=0.999, eps=1e-8)
        params = {"w": np.array([1.0])}
        state = AdamWState.init(params)
        w = 1.0
        m = v = 0.0
        for t in (1, 2):
            g = 2.0 * w  # gradient of w^2
            adamw_step({"w": params["w"]}, {"w": np.array([2.0 * params["w"][0]])},
                       state, lr=0.05, hp=hp)
            m = 0.9 * m + 0.1 * g
            v = 0.999 * v + 0.001 * g * g
            mh = m / (1 - 0.9 ** t)
            vh = v / (1 - 0.999 ** t)
            w = w - 0.05 * mh / (np.sqrt(vh) + 1e-8)
            assert params["w"][0] == pytest.approx(w, rel=1e-12)

    def test_decoupled_decay_shrinks_before_step(self):
        hp = AdamWParams(decoupled_wd=0.5)
        params = {"w": np.array([2.0])}
        adamw_step(params, {"w": np.array([0.0])}, AdamWState.init(params), lr=0.1, hp=hp)
        # Zero gradient: only the multiplicative decay acts.
        assert params["w"][0] == pytest.approx(2.0 * (1 - 0.1 * 0.5))

    def test_nonfinite_gradient_raises(self):
        params = {"w": np.zeros(1)}
        with pytest.raises(NumericError):
            adamw_step(params, {"w": np.array([np.nan])},
                       AdamWState.init(params), lr=0.1, hp=AdamWParams())


class TestGdFullBatch:
    def test_ls_stationary_margin(self, two_point_dist):
        res = gd_full_batch_l2(LinearBinaryModel.zeros(1), two_point_dist,
                               LossSpec.label_smoothing(0.2), grad_tol=1e-10)
        assert res.converged
        assert res.model.w[0] == pytest.approx(LS02_MARGIN, abs=1e-8)

    def test_l2_keeps_solution_finite_for_ce(self, two_point_dist):
        spec = LossSpec.ce(l2_beta=0.1)
        res = gd_full_batch_l2(LinearBinaryModel.zeros(1), two_point_dist, spec,
                               grad_tol=1e-10)
        assert res.converged
        # Stationarity: beta * w = sigma(-w) on this symmetric instance.
        w = res.model.w[0]
        assert 0.1 * w == pytest.approx(1 / (1 + np.exp(w)), abs=1e-8)

    def test_mixup_needs_grid(self, two_point_dist):
        with pytest.raises(ConfigurationError, match="lambda grid"):
            gd_full_batch_l2(LinearBinaryModel.zeros(1), two_point_dist,
                             LossSpec.mixup(MixingDistribution.point_mass(0.5)))

    def test_mixup_budget_guard(self):
        rng = np.random.default_rng(0)
        n = 3000
        pi = FiniteDistribution(points=rng.normal(size=(n, 1)),
                                labels=rng.integers(0, 2, size=n) * 2 - 1,
                                probs=np.full(n, 1 / n), k=2)
        with pytest.raises(ConfigurationError, match="support too large"):
            gd_full_batch_l2(LinearBinaryModel.zeros(1), pi, LossSpec.mixup(MixingDistribution.point_mass(0.5)),
                             lambda_grid=LambdaGrid(np.full(501, 0.5), np.full(501, 1 / 501)))

    def test_plain_gd_matches_accelerated(self, two_point_dist):
        spec = LossSpec.label_smoothing(0.3)
        a = gd_full_batch_l2(LinearBinaryModel.zeros(1), two_point_dist, spec,
                             grad_tol=1e-10, accelerated=True)
        b = gd_full_batch_l2(LinearBinaryModel.zeros(1), two_point_dist, spec,
                             grad_tol=1e-10, accelerated=False)
        assert a.model.w[0] == pytest.approx(b.model.w[0], abs=1e-7)
        assert a.steps <= b.steps

    def test_nonconvergence_reported(self, two_point_dist):
        res = gd_full_batch_l2(LinearBinaryModel.zeros(1), two_point_dist,
                               LossSpec.label_smoothing(0.2), steps=2, grad_tol=1e-14)
        assert not res.converged
        assert res.steps == 2

    @given(st.floats(0.05, 0.9), st.integers(0, 10 ** 6))
    @settings(max_examples=10, deadline=None)
    def test_result_beats_random_probes(self, alpha, seed):
        rng = np.random.default_rng(seed)
        pts = rng.normal(size=(6, 2))
        labels = rng.integers(0, 2, size=6) * 2 - 1
        pi = FiniteDistribution(points=pts, labels=labels, probs=np.full(6, 1 / 6), k=2)
        spec = LossSpec.label_smoothing(alpha, l2_beta=0.01)
        res = gd_full_batch_l2(LinearBinaryModel.zeros(2), pi, spec, grad_tol=1e-8)

        def objective(w):
            return population_loss(w, pi, spec) + 0.005 * float(w @ w)

        best_probe = min(objective(rng.normal(size=2)) for _ in range(20))
        assert objective(res.model.w) <= best_probe + 1e-9


class TestMaxMargin:
    def test_analytic_two_point(self):
        # Constraint active at both points: w = (x / ||x||^2) with x = (1, 0.1).
        ds = Dataset(features=np.array([[1.0, 0.1], [-1.0, -0.1]]),
                     labels=np.array([1, -1]), k=2)
        w = max_margin_solve(ds)
        want = np.array([1.0, 0.1]) / 1.01
        assert np.allclose(w, want, atol=1e-5)

    def test_margins_at_least_one(self, separable_ds):
        w = max_margin_solve(separable_ds)
        margins = separable_ds.labels * (separable_ds.features @ w)
        assert margins.min() >= 1 - 1e-5

    @given(st.integers(0, 10 ** 6))
    @settings(max_examples=15, deadline=None)
    def test_matches_norm_of_any_feasible_probe(self, seed):
        rng = np.random.default_rng(seed)
        n, d = rng.integers(3, 8), 3
        y = rng.integers(0, 2, size=n) * 2 - 1
        x = rng.normal(size=(n, d))
        x[:, 0] = (np.abs(x[:, 0]) + 0.5) * y
        ds = Dataset(features=x, labels=y, k=2)
        w = max_margin_solve(ds)
        # Any feasible probe must have norm >= the solver's, up to tolerance.
        for _ in range(20):
            probe = w + rng.normal(size=d) * 0.1
            margins = y * (x @ probe)
            if margins.min() >= 1:
                assert np.linalg.norm(probe) >= np.linalg.norm(w) - 1e-4

    def test_infeasible_raises(self):
        ds = Dataset(features=np.array([[1.0, 0.0], [1.0, 0.0]]),
                     labels=np.array([1, -1]), k=2)
        with pytest.raises(InfeasibilityError):
            max_margin_solve(ds)

    def test_multiclass_rejected(self):
        ds = Dataset(features=np.zeros((3, 2)), labels=np.array([0, 1, 2]), k=3)
        with pytest.raises(ConfigurationError):
            max_margin_solve(ds)
