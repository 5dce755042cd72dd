"""Dense ReLU regressor in plain numpy: forward pass, losses and backprop."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

DEFAULT_DIMS = (2, 64, 64, 1)
ACTIVATIONS = ("relu", "identity")


class ShapeError(ValueError):
    pass


@dataclass
class MlpModel:
    """Layer ``l`` maps ``x -> act(W[l] @ x + b[l])`` with ``W[l]`` shaped (fan_out, fan_in)."""

    layer_dims: tuple[int, ...]
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    activations: tuple[str, ...] = field(default=())

    def __post_init__(self):
        self.layer_dims = tuple(int(d) for d in self.layer_dims)
        _check_dims(self.layer_dims)
        n_layers = len(self.layer_dims) - 1
        if not self.activations:
            self.activations = ("relu",) * (n_layers - 1) + ("identity",)
        self.activations = tuple(self.activations)
        if len(self.weights) != n_layers or len(self.biases) != n_layers or len(self.activations) != n_layers:
            raise ShapeError("need one weight matrix, bias vector and activation per layer")
        for l, (w, b, act) in enumerate(zip(self.weights, self.biases, self.activations)):
            fan_in, fan_out = self.layer_dims[l], self.layer_dims[l + 1]
            if w.shape != (fan_out, fan_in) or b.shape != (fan_out,):
                raise ShapeError(
                    f"layer {l}: expected W{(fan_out, fan_in)} and b{(fan_out,)}, got W{w.shape} b{b.shape}"
                )
            if act not in ACTIVATIONS:
                raise ValueError(f"unknown activation {act!r}")
            if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
                raise ValueError(f"layer {l} has non-finite parameters")

    @property
    def n_params(self) -> int:
        return sum(w.size + b.size for w, b in zip(self.weights, self.biases))

    def params(self) -> list[np.ndarray]:
        """Flat parameter list ``[W0, b0, W1, b1, ...]`` (views, not copies)."""
        out = []
        for w, b in zip(self.weights, self.biases):
            out += [w, b]
        return out

    def with_params(self, params: list[np.ndarray]) -> "MlpModel":
        return MlpModel(
            self.layer_dims,
            [np.array(p, dtype=float) for p in params[0::2]],
            [np.array(p, dtype=float) for p in params[1::2]],
            self.activations,
        )

    def copy(self) -> "MlpModel":
        return self.with_params(self.params())

    def predict(self, X: np.ndarray) -> np.ndarray:
        return forward(self, X)


def _check_dims(dims):
    if len(dims) < 2 or any(d < 1 for d in dims):
        raise ValueError(f"invalid layer dims {dims}")


def init_mlp(dims=DEFAULT_DIMS, seed: int = 0) -> MlpModel:
    """Glorot-uniform weights, zero biases."""
    dims = tuple(int(d) for d in dims)
    _check_dims(dims)
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-limit, limit, size=(fan_out, fan_in)))
        biases.append(np.zeros(fan_out))
    return MlpModel(dims, weights, biases)


def _as_batch(m: MlpModel, x) -> tuple[np.ndarray, bool]:
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    X = x[None, :] if single else x
    if X.ndim != 2 or X.shape[1] != m.layer_dims[0]:
        raise ShapeError(f"expected inputs with {m.layer_dims[0]} features, got shape {x.shape}")
    return X, single


def _forward_cache(m: MlpModel, X: np.ndarray):
    pre, post = [], [X]
    h = X
    for w, b, act in zip(m.weights, m.biases, m.activations):
        z = h @ w.T + b
        h = np.maximum(z, 0.0) if act == "relu" else z
        pre.append(z)
        post.append(h)
    return pre, post


def forward(m: MlpModel, x) -> np.ndarray:
    """Network output. A single sample returns shape (out,); a batch returns (n,) for scalar output."""
    X, single = _as_batch(m, x)
    out = _forward_cache(m, X)[1][-1]
    if single:
        return out[0]
    return out[:, 0] if out.shape[1] == 1 else out


def _pair(pred, actual):
    pred = np.asarray(pred, dtype=float).ravel()
    actual = np.asarray(actual, dtype=float).ravel()
    if pred.size != actual.size or pred.size == 0:
        raise ShapeError(f"length mismatch: {pred.size} predictions vs {actual.size} targets")
    return pred, actual


def mse(pred, actual) -> float:
    pred, actual = _pair(pred, actual)
    return float(np.mean((pred - actual) ** 2))


def composite_loss(pred, actual, bsm_anchor=None, lam: float = 0.0) -> float:
    """``mse(pred, actual) + lam * mse(pred, bsm_anchor)``; ``lam == 0`` is plain MSE."""
    if lam < 0:
        raise ValueError(f"lambda must be >= 0, got {lam}")
    loss = mse(pred, actual)
    if lam == 0:
        return loss
    if bsm_anchor is None:
        raise ValueError("a BSM anchor is required when lambda > 0")
    return loss + lam * mse(pred, bsm_anchor)


def backward(m: MlpModel, X, y, bsm_anchor=None, lam: float = 0.0):
    """Loss and exact gradients ``[dW0, db0, dW1, db1, ...]`` of the batch-mean loss."""
    X, _ = _as_batch(m, X)
    if m.layer_dims[-1] != 1:
        raise ShapeError("backward supports single-output networks only")
    pre, post = _forward_cache(m, X)
    pred = post[-1][:, 0]
    _, y = _pair(pred, y)
    n = X.shape[0]
    loss = composite_loss(pred, y, bsm_anchor, lam)
    dout = (2.0 / n) * (pred - y)
    if lam != 0:
        _, anchor = _pair(pred, bsm_anchor)
        dout = dout + lam * (2.0 / n) * (pred - anchor)
    delta = dout[:, None]
    grads = [None] * (2 * len(m.weights))
    for l in range(len(m.weights) - 1, -1, -1):
        if m.activations[l] == "relu":
            delta = delta * (pre[l] > 0)
        grads[2 * l] = delta.T @ post[l]
        grads[2 * l + 1] = delta.sum(axis=0)
        if l > 0:
            delta = delta @ m.weights[l]
    return loss, grads
