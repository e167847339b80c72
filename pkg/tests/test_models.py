"""Model forward passes, analytic gradients, and JSON serialization."""

import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from labelvar.errors import ConfigurationError, DataFormatError
from labelvar.losses import LossSpec
from labelvar.models import (
    LinearBinaryModel,
    MlpModel,
    SoftmaxLinearModel,
    clone_model,
    forward,
    hidden_activations,
    model_from_json,
    model_loss_grad,
    model_to_json,
    predict_error,
    predict_proba,
)


def fd_array_grads(model, x, y, spec, eps=1e-6):
    """Central-difference gradients over every array parameter in place."""
    out = {}
    for name, p in model.params().items():
        if p.base is None and name == "bias":
            continue  # scalar bias copies are handled separately
        g = np.zeros_like(p)
        it = np.nditer(p, flags=["multi_index"])
        for _ in it:
            idx = it.multi_index
            orig = p[idx]
            p[idx] = orig + eps
            hi, _ = model_loss_grad(model, x, y, spec)
            p[idx] = orig - eps
            lo, _ = model_loss_grad(model, x, y, spec)
            p[idx] = orig
            g[idx] = (hi - lo) / (2 * eps)
        out[name] = g
    return out


class TestLinearBinaryModel:
    def test_forward_is_dot_product(self, rng):
        m = LinearBinaryModel(w=np.array([1.0, -2.0, 0.5]))
        x = rng.normal(size=(5, 3))
        assert np.allclose(forward(m, x), x @ m.w)

    def test_bias_adds_constant(self):
        m = LinearBinaryModel(w=np.zeros(2), bias=3.0)
        assert np.allclose(forward(m, np.zeros((4, 2))), 3.0)

    def test_init_range_and_determinism(self):
        a = LinearBinaryModel.init(16, seed=3)
        b = LinearBinaryModel.init(16, seed=3)
        assert np.array_equal(a.w, b.w)
        assert np.abs(a.w).max() <= 1 / 4.0

    def test_predict_error(self):
        m = LinearBinaryModel(w=np.array([1.0]))
        x = np.array([[1.0], [-1.0], [2.0]])
        y = np.array([1, -1, -1])
        assert predict_error(m, x, y) == pytest.approx(1 / 3)

    def test_predict_proba_columns(self, rng):
        m = LinearBinaryModel.init(4, seed=0)
        x = rng.normal(size=(6, 4))
        p = predict_proba(m, x)
        assert p.shape == (6, 2)
        assert np.allclose(p.sum(axis=1), 1.0)
        z = forward(m, x)
        assert np.allclose(p[:, 1], 1 / (1 + np.exp(-z)))

    def test_rejects_matrix_weights(self):
        with pytest.raises(ConfigurationError):
            LinearBinaryModel(w=np.zeros((2, 2)))
        with pytest.raises(ConfigurationError):
            LinearBinaryModel(w=np.array([np.inf]))


class TestSoftmaxLinearModel:
    def test_shapes_and_error(self, rng):
        m = SoftmaxLinearModel(weight=rng.normal(size=(4, 5)))
        x = rng.normal(size=(7, 5))
        logits = forward(m, x)
        assert logits.shape == (7, 4)
        p = predict_proba(m, x)
        assert np.allclose(p.sum(axis=1), 1.0)
        assert predict_error(m, x, logits.argmax(axis=1)) == 0.0

    def test_bias_shape_checked(self):
        with pytest.raises(ConfigurationError):
            SoftmaxLinearModel(weight=np.zeros((3, 2)), bias=np.zeros(2))


class TestMlpModel:
    def test_forward_matches_manual(self, rng):
        m = MlpModel.init(d=4, hidden=8, k=3, seed=2)
        x = rng.normal(size=(5, 4))
        h = np.maximum(x @ m.w1.T + m.b1, 0.0)
        want = h @ m.w2.T + m.b2
        assert np.allclose(forward(m, x), want)
        assert np.allclose(hidden_activations(m, x), h)

    def test_activation_capture(self, rng):
        m = MlpModel.init(d=3, hidden=4, k=2, seed=0, )
        x = rng.normal(size=(5, 3))
        assert m.last_activations is None
        m.capture_activations = True
        forward(m, x)
        assert np.allclose(m.last_activations, hidden_activations(m, x))

    @given(st.integers(0, 10 ** 6))
    @settings(max_examples=8, deadline=None)
    def test_backprop_matches_finite_differences(self, seed):
        rng = np.random.default_rng(seed)
        m = MlpModel.init(d=3, hidden=4, k=3, seed=seed)
        # Shift ReLU inputs away from the kink so central differences are valid.
        m.b1 += 0.05
        x = rng.normal(size=(6, 3))
        y = rng.integers(0, 3, size=6)
        spec = LossSpec.label_smoothing(0.2)
        _, grads = model_loss_grad(m, x, y, spec)
        fd = fd_array_grads(m, x, y, spec)
        for name in fd:
            assert np.abs(grads[name] - fd[name]).max() < 1e-6, name

    def test_clone_is_independent(self):
        m = MlpModel.init(d=2, hidden=3, k=2, seed=0)
        c = clone_model(m)
        c.w1[:] = 99.0
        assert not np.array_equal(m.w1, c.w1)

    def test_shape_validation(self):
        with pytest.raises(ConfigurationError):
            MlpModel(w1=np.zeros((3, 2)), b1=np.zeros(2),
                     w2=np.zeros((2, 3)), b2=np.zeros(2))


class TestLinearGradient:
    @given(st.integers(0, 10 ** 6))
    @settings(max_examples=8, deadline=None)
    def test_matches_finite_differences(self, seed):
        rng = np.random.default_rng(seed)
        m = LinearBinaryModel.init(4, seed=seed)
        x = rng.normal(size=(10, 4))
        y = rng.integers(0, 2, size=10) * 2 - 1
        spec = LossSpec.ce()
        _, grads = model_loss_grad(m, x, y, spec)
        fd = fd_array_grads(m, x, y, spec)
        assert np.abs(grads["w"] - fd["w"]).max() < 1e-6

    def test_bias_gradient(self, rng):
        m = LinearBinaryModel(w=rng.normal(size=3), bias=0.3)
        x = rng.normal(size=(8, 3))
        y = rng.integers(0, 2, size=8) * 2 - 1
        spec = LossSpec.ce()
        _, grads = model_loss_grad(m, x, y, spec)
        eps = 1e-6
        hi, _ = model_loss_grad(LinearBinaryModel(w=m.w, bias=m.bias + eps), x, y, spec)
        lo, _ = model_loss_grad(LinearBinaryModel(w=m.w, bias=m.bias - eps), x, y, spec)
        assert grads["bias"][0] == pytest.approx((hi - lo) / (2 * eps), abs=1e-6)

    def test_softmax_gradient(self, rng):
        m = SoftmaxLinearModel(weight=rng.normal(size=(3, 4)) * 0.2, bias=np.zeros(3))
        x = rng.normal(size=(9, 4))
        y = rng.integers(0, 3, size=9)
        spec = LossSpec.label_smoothing(0.1)
        _, grads = model_loss_grad(m, x, y, spec)
        fd = fd_array_grads(m, x, y, spec)
        for name in fd:
            assert np.abs(grads[name] - fd[name]).max() < 1e-6, name


class TestJsonRoundTrip:
    @pytest.mark.parametrize("builder", [
        lambda: LinearBinaryModel(w=np.random.default_rng(1).normal(size=5), bias=0.7),
        lambda: SoftmaxLinearModel(weight=np.random.default_rng(2).normal(size=(3, 4))),
        lambda: MlpModel.init(d=3, hidden=6, k=4, seed=3),
    ])
    def test_round_trip(self, builder, rng):
        model = builder()
        back = model_from_json(model_to_json(model))
        assert type(back) is type(model)
        x = rng.normal(size=(5, model.d))
        assert np.array_equal(forward(back, x), forward(model, x))

    def test_bad_version(self):
        doc = json.loads(model_to_json(LinearBinaryModel.zeros(2)))
        doc["version"] = 99
        with pytest.raises(DataFormatError, match="version"):
            model_from_json(json.dumps(doc))

    def test_unknown_type(self):
        doc = json.loads(model_to_json(LinearBinaryModel.zeros(2)))
        doc["type"] = "transformer"
        with pytest.raises(DataFormatError):
            model_from_json(json.dumps(doc))

    def test_malformed_json(self):
        with pytest.raises(DataFormatError):
            model_from_json("{not json")
