"""First-order optimizers over a list of numpy parameter arrays."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

OPTIMIZERS = ("adam", "sgd", "rmsprop")


class Optimizer:
    """Stateful update rule. ``step`` returns new arrays and leaves its inputs untouched."""

    def step(self, params, grads):
        if len(params) != len(grads):
            raise ValueError(f"{len(params)} parameter arrays but {len(grads)} gradients")
        for p, g in zip(params, grads):
            if p.shape != g.shape:
                raise ValueError(f"gradient shape {g.shape} does not match parameter {p.shape}")
        return self._step(params, grads)

    def _step(self, params, grads):
        raise NotImplementedError


@dataclass
class SGD(Optimizer):
    lr: float = 1e-2

    def _step(self, params, grads):
        return [p - self.lr * g for p, g in zip(params, grads)]


@dataclass
class RMSprop(Optimizer):
    # eps sits inside the square root
    lr: float = 1e-3
    rho: float = 0.9
    eps: float = 1e-8

    def __post_init__(self):
        self._v = None

    def _step(self, params, grads):
        if self._v is None:
            self._v = [np.zeros_like(p) for p in params]
        out = []
        for i, (p, g) in enumerate(zip(params, grads)):
            self._v[i] = self.rho * self._v[i] + (1 - self.rho) * g * g
            out.append(p - self.lr * g / np.sqrt(self._v[i] + self.eps))
        return out


@dataclass
class Adam(Optimizer):
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    def __post_init__(self):
        self._m = None
        self._v = None
        self.t = 0

    def _step(self, params, grads):
        if self._m is None:
            self._m = [np.zeros_like(p) for p in params]
            self._v = [np.zeros_like(p) for p in params]
        self.t += 1
        c1 = 1 - self.beta1**self.t
        c2 = 1 - self.beta2**self.t
        out = []
        for i, (p, g) in enumerate(zip(params, grads)):
            self._m[i] = self.beta1 * self._m[i] + (1 - self.beta1) * g
            self._v[i] = self.beta2 * self._v[i] + (1 - self.beta2) * g * g
            m_hat = self._m[i] / c1
            v_hat = self._v[i] / c2
            out.append(p - self.lr * m_hat / (np.sqrt(v_hat) + self.eps))
        return out


def make_optimizer(kind: str, **hyper) -> Optimizer:
    kind = kind.lower()
    classes = {"adam": Adam, "sgd": SGD, "rmsprop": RMSprop}
    if kind not in classes:
        raise ValueError(f"unknown optimizer {kind!r}; choose from {OPTIMIZERS}")
    return classes[kind](**hyper)
