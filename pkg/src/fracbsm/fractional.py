"""Discrete Riemann-Liouville fractional derivative on a uniform grid.

Two routes compute the same lag-weighted sum

    D[i] = Gamma(1 - alpha)^-1 * dt^-alpha * sum_{k<i} (i - k)^-alpha * c[k],   D[0] = 0

``rl_fractional_derivative`` is the literal double loop and serves as the
conformance reference. ``rl_fractional_derivative_fast`` evaluates the sum as
a causal convolution through a cached FFT of the lag weights.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import fft as sp_fft

_LANCZOS_G = 7
_LANCZOS_COEF = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)


def gamma_fn(x: float) -> float:
    """Gamma function for x > 0 (Lanczos, g=7, 9 terms; reflection below 1/2).

    Positive integers up to 171 are returned exactly as factorials.
    """
    x = float(x)
    if not x > 0 or not math.isfinite(x):
        raise ValueError(f"gamma_fn is defined here for finite x > 0, got {x}")
    if x.is_integer() and x <= 171:
        return float(math.factorial(int(x) - 1))
    if x < 0.5:
        return math.pi / (math.sin(math.pi * x) * gamma_fn(1.0 - x))
    return _lanczos(x)


def _lanczos(x: float) -> float:
    x -= 1.0
    a = _LANCZOS_COEF[0]
    for i in range(1, len(_LANCZOS_COEF)):
        a += _LANCZOS_COEF[i] / (x + i)
    t = x + _LANCZOS_G + 0.5
    return math.sqrt(2 * math.pi) * t ** (x + 0.5) * math.exp(-t) * a


@dataclass(frozen=True)
class FractionalOrder:
    """Differentiation order in [0, 1). Zero is only meant for test oracles."""

    alpha: float

    def __post_init__(self):
        a = float(self.alpha)
        if not (0.0 <= a < 1.0):
            raise ValueError(f"fractional order must lie in [0, 1), got {self.alpha}")
        object.__setattr__(self, "alpha", a)

    @property
    def is_test_mode(self) -> bool:
        return self.alpha == 0.0


@dataclass(frozen=True)
class Series:
    """A finite sequence sampled with uniform spacing ``delta_t``."""

    values: np.ndarray
    delta_t: float

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1 or v.size < 1:
            raise ValueError("series values must be a non-empty 1-D sequence")
        if not np.all(np.isfinite(v)):
            raise ValueError("series values must be finite")
        if not (self.delta_t > 0 and math.isfinite(self.delta_t)):
            raise ValueError(f"delta_t must be finite and > 0, got {self.delta_t}")
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "delta_t", float(self.delta_t))


def _as_order(order) -> FractionalOrder:
    return order if isinstance(order, FractionalOrder) else FractionalOrder(order)


def _prefactor(alpha: float, delta_t: float) -> tuple[float, float]:
    return 1 / gamma_fn(1 - alpha), delta_t ** (-alpha)


def rl_fractional_derivative(c: Series, order) -> np.ndarray:
    """Reference double loop; summation runs over k in ascending order."""
    alpha = _as_order(order).alpha
    values = c.values.tolist()
    n = len(values)
    result = np.zeros(n)
    inv_gamma, dt_pow = _prefactor(alpha, c.delta_t)
    for i in range(1, n):
        integral_sum = 0.0
        for k in range(i):
            integral_sum += ((i - k) ** (-alpha)) * values[k]
        result[i] = inv_gamma * integral_sum * dt_pow
    return result


@lru_cache(maxsize=64)
def _weight_spectrum(n: int, alpha: float) -> tuple[int, np.ndarray]:
    size = sp_fft.next_fast_len(2 * n - 1, real=True)
    spec = sp_fft.rfft(lag_weights(n, alpha), size)
    spec.flags.writeable = False
    return size, spec


def lag_weights(n: int, alpha: float) -> np.ndarray:
    """Lag weights ``w[j] = j**-alpha`` for j >= 1, with ``w[0] = 0``."""
    w = np.zeros(n)
    w[1:] = np.arange(1, n, dtype=float) ** (-alpha)
    return w


def rl_fractional_derivative_fast(c: Series, order) -> np.ndarray:
    alpha = _as_order(order).alpha
    x = c.values
    n = x.size
    inv_gamma, dt_pow = _prefactor(alpha, c.delta_t)
    result = np.zeros(n)
    if n == 1:
        return result
    if alpha == 0.0:
        # Unit weights: the sum is an exclusive prefix sum.
        result[1:] = inv_gamma * np.cumsum(x[:-1]) * dt_pow
        return result
    size, spec = _weight_spectrum(n, alpha)
    conv = sp_fft.irfft(sp_fft.rfft(x, size) * spec, size)[:n]
    result[1:] = inv_gamma * conv[1:] * dt_pow
    return result
