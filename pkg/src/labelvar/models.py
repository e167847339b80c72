"""Linear and 2-layer ReLU MLP classifiers with exact parameter gradients.

Gradients chain the loss-side logit gradients from :mod:`labelvar.losses`
through the model, so every loss kind works with every model.
"""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, DataFormatError
from .losses import LossSpec, MixedTargets, batch_loss_grad, _sigmoid, _softmax

MODEL_JSON_VERSION = 1


@dataclass
class LinearBinaryModel:
    """Logistic model sigma(w.x); bias-free by default."""

    w: np.ndarray
    bias: float | None = None

    def __post_init__(self):
        self.w = np.asarray(self.w, dtype=np.float64)
        if self.w.ndim != 1:
            raise ConfigurationError("w must be a vector")
        if not np.all(np.isfinite(self.w)):
            raise ConfigurationError("w must be finite")

    @classmethod
    def zeros(cls, d: int) -> "LinearBinaryModel":
        return cls(w=np.zeros(d))

    @classmethod
    def init(cls, d: int, seed: int = 0) -> "LinearBinaryModel":
        """Symmetric uniform fan-in initialization, U[-1/sqrt(d), 1/sqrt(d)]."""
        rng = np.random.default_rng(seed)
        lim = 1.0 / np.sqrt(d)
        return cls(w=rng.uniform(-lim, lim, size=d))

    @property
    def d(self) -> int:
        return self.w.size

    @property
    def k(self) -> int:
        return 2

    def params(self) -> dict[str, np.ndarray]:
        out = {"w": self.w}
        if self.bias is not None:
            out["bias"] = np.atleast_1d(np.float64(self.bias))
        return out


@dataclass
class SoftmaxLinearModel:
    """Multiclass linear model with softmax outputs."""

    weight: np.ndarray  # (k, d)
    bias: np.ndarray | None = None

    def __post_init__(self):
        self.weight = np.asarray(self.weight, dtype=np.float64)
        if self.weight.ndim != 2:
            raise ConfigurationError("weight must be a (k, d) matrix")
        if self.bias is not None:
            self.bias = np.asarray(self.bias, dtype=np.float64)
            if self.bias.shape != (self.weight.shape[0],):
                raise ConfigurationError("bias must have one entry per class")

    @classmethod
    def zeros(cls, k: int, d: int, bias: bool = False) -> "SoftmaxLinearModel":
        return cls(weight=np.zeros((k, d)), bias=np.zeros(k) if bias else None)

    @property
    def d(self) -> int:
        return self.weight.shape[1]

    @property
    def k(self) -> int:
        return self.weight.shape[0]

    def params(self) -> dict[str, np.ndarray]:
        out = {"weight": self.weight}
        if self.bias is not None:
            out["bias"] = self.bias
        return out


@dataclass
class MlpModel:
    """2-layer ReLU network; optionally captures post-ReLU hidden activations."""

    w1: np.ndarray  # (h, d)
    b1: np.ndarray  # (h,)
    w2: np.ndarray  # (k, h)
    b2: np.ndarray  # (k,)
    capture_activations: bool = False
    last_activations: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        self.w1 = np.asarray(self.w1, dtype=np.float64)
        self.b1 = np.asarray(self.b1, dtype=np.float64)
        self.w2 = np.asarray(self.w2, dtype=np.float64)
        self.b2 = np.asarray(self.b2, dtype=np.float64)
        h, d = self.w1.shape
        k = self.w2.shape[0]
        if self.b1.shape != (h,) or self.w2.shape != (k, h) or self.b2.shape != (k,):
            raise ConfigurationError("inconsistent MLP shapes")
        if h < 1:
            raise ConfigurationError("hidden size must be >= 1")

    @classmethod
    def init(cls, d: int, hidden: int, k: int, seed: int = 0) -> "MlpModel":
        """Symmetric uniform fan-in initialization (U[-1/sqrt(fan_in), ...])."""
        rng = np.random.default_rng(seed)
        lim1 = 1.0 / np.sqrt(d)
        lim2 = 1.0 / np.sqrt(hidden)
        return cls(
            w1=rng.uniform(-lim1, lim1, size=(hidden, d)),
            b1=rng.uniform(-lim1, lim1, size=hidden),
            w2=rng.uniform(-lim2, lim2, size=(k, hidden)),
            b2=rng.uniform(-lim2, lim2, size=k),
        )

    @property
    def d(self) -> int:
        return self.w1.shape[1]

    @property
    def hidden(self) -> int:
        return self.w1.shape[0]

    @property
    def k(self) -> int:
        return self.w2.shape[0]

    def params(self) -> dict[str, np.ndarray]:
        return {"w1": self.w1, "b1": self.b1, "w2": self.w2, "b2": self.b2}


Model = LinearBinaryModel | SoftmaxLinearModel | MlpModel


def clone_model(model: Model) -> Model:
    return copy.deepcopy(model)


def forward(model: Model, x: np.ndarray) -> np.ndarray:
    """Logits: shape (n,) for the binary linear model, else (n, k).

    An MLP with ``capture_activations`` set keeps its post-ReLU hidden
    activations in ``last_activations``.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise ConfigurationError("inputs must be a (n, d) matrix")
    if x.shape[1] != model.d:
        raise ConfigurationError(f"input dimension {x.shape[1]} != model dimension {model.d}")
    if isinstance(model, LinearBinaryModel):
        s = x @ model.w
        if model.bias is not None:
            s = s + model.bias
        return s
    if isinstance(model, SoftmaxLinearModel):
        logits = x @ model.weight.T
        if model.bias is not None:
            logits = logits + model.bias
        return logits
    hidden = np.maximum(x @ model.w1.T + model.b1, 0.0)
    if model.capture_activations:
        model.last_activations = hidden
    return hidden @ model.w2.T + model.b2


def hidden_activations(model: MlpModel, x: np.ndarray) -> np.ndarray:
    return np.maximum(np.asarray(x, dtype=np.float64) @ model.w1.T + model.b1, 0.0)


def predict_proba(model: Model, x: np.ndarray) -> np.ndarray:
    """Simplex outputs of shape (n, k); binary columns are (P[-1], P[+1])."""
    logits = forward(model, x)
    if logits.ndim == 1:
        p = _sigmoid(logits)
        return np.column_stack([1.0 - p, p])
    return _softmax(logits)


def predict_error(model: Model, features: np.ndarray, labels: np.ndarray) -> float:
    """0/1 classification error."""
    logits = forward(model, features)
    if logits.ndim == 1:
        pred = np.where(logits > 0, 1, -1)
    else:
        pred = logits.argmax(axis=1)
    return float(np.mean(pred != labels))


def model_loss_grad(model: Model, x: np.ndarray, targets, spec: LossSpec):
    """Mean batch loss and exact gradients w.r.t. every model parameter.

    The explicit L2 term is not included; optimizers add it where wanted.
    """
    x = np.asarray(x, dtype=np.float64)
    if isinstance(model, MlpModel):
        a = x @ model.w1.T + model.b1
        hidden = np.maximum(a, 0.0)
        logits = hidden @ model.w2.T + model.b2
        loss, dlogits = batch_loss_grad(logits, targets, spec)
        dw2 = dlogits.T @ hidden
        db2 = dlogits.sum(axis=0)
        dhidden = dlogits @ model.w2
        da = dhidden * (a > 0)
        dw1 = da.T @ x
        db1 = da.sum(axis=0)
        return loss, {"w1": dw1, "b1": db1, "w2": dw2, "b2": db2}
    logits = forward(model, x)
    loss, dlogits = batch_loss_grad(logits, targets, spec)
    if isinstance(model, LinearBinaryModel):
        grads = {"w": x.T @ dlogits}
        if model.bias is not None:
            grads["bias"] = np.atleast_1d(dlogits.sum())
        return loss, grads
    grads = {"weight": dlogits.T @ x}
    if model.bias is not None:
        grads["bias"] = dlogits.sum(axis=0)
    return loss, grads


def _array_to_rows(arr: np.ndarray) -> list:
    return [float(v) for v in np.asarray(arr, dtype=np.float64).ravel(order="C")]


def model_to_json(model: Model) -> str:
    """Versioned JSON document: shape header plus row-major weights."""
    if isinstance(model, LinearBinaryModel):
        doc = {
            "version": MODEL_JSON_VERSION, "type": "linear_binary",
            "d": model.d, "w": _array_to_rows(model.w),
            "bias": None if model.bias is None else float(model.bias),
        }
    elif isinstance(model, SoftmaxLinearModel):
        doc = {
            "version": MODEL_JSON_VERSION, "type": "softmax_linear",
            "k": model.k, "d": model.d, "weight": _array_to_rows(model.weight),
            "bias": None if model.bias is None else _array_to_rows(model.bias),
        }
    elif isinstance(model, MlpModel):
        doc = {
            "version": MODEL_JSON_VERSION, "type": "mlp",
            "d": model.d, "hidden": model.hidden, "k": model.k,
            "w1": _array_to_rows(model.w1), "b1": _array_to_rows(model.b1),
            "w2": _array_to_rows(model.w2), "b2": _array_to_rows(model.b2),
        }
    else:
        raise ConfigurationError(f"cannot serialize {type(model).__name__}")
    return json.dumps(doc)


def model_from_json(text: str) -> Model:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DataFormatError(f"invalid model JSON: {exc}") from exc
    version = doc.get("version")
    if version != MODEL_JSON_VERSION:
        raise DataFormatError(f"unsupported model JSON version {version}")
    kind = doc.get("type")
    if kind == "linear_binary":
        return LinearBinaryModel(w=np.array(doc["w"]), bias=doc["bias"])
    if kind == "softmax_linear":
        k, d = doc["k"], doc["d"]
        bias = None if doc["bias"] is None else np.array(doc["bias"])
        return SoftmaxLinearModel(weight=np.array(doc["weight"]).reshape(k, d), bias=bias)
    if kind == "mlp":
        d, h, k = doc["d"], doc["hidden"], doc["k"]
        return MlpModel(
            w1=np.array(doc["w1"]).reshape(h, d), b1=np.array(doc["b1"]),
            w2=np.array(doc["w2"]).reshape(k, h), b2=np.array(doc["b2"]),
        )
    raise DataFormatError(f"unknown model type {kind!r}")
