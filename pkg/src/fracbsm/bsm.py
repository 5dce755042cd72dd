"""Closed-form Black-Scholes-Merton pricing for European calls and puts."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

# Below this, sigma or T is treated as degenerate by the path builders.
EPS_GUARD = 1e-10


class DegenerateInputError(ValueError):
    """Raised when a closed form is evaluated at tau <= 0 or sigma <= 0."""


@dataclass(frozen=True)
class OptionParams:
    """Market inputs for one European option on a non-dividend asset."""

    S: float
    K: float
    T: float
    r: float
    sigma: float

    def __post_init__(self):
        for name in ("S", "K", "T", "r", "sigma"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise ValueError(f"{name} must be finite, got {value!r}")
            object.__setattr__(self, name, float(value))
        if self.S <= 0:
            raise ValueError(f"spot S must be > 0, got {self.S}")
        if self.K <= 0:
            raise ValueError(f"strike K must be > 0, got {self.K}")
        if self.T < 0:
            raise ValueError(f"maturity T must be >= 0, got {self.T}")
        if self.sigma < 0:
            raise ValueError(f"volatility sigma must be >= 0, got {self.sigma}")


@dataclass(frozen=True)
class PricePath:
    """Option values sampled on a uniform time-to-expiry grid starting at 0."""

    tau_grid: np.ndarray
    values: np.ndarray
    delta_t: float


def norm_cdf(x):
    """Standard normal CDF. Accepts a scalar or an array."""
    out = ndtr(x)
    if np.ndim(out) == 0:
        return float(out)
    return out


def d_terms(p: OptionParams, tau: float) -> tuple[float, float]:
    if not tau > 0:
        raise DegenerateInputError(f"d-terms need tau > 0, got {tau}")
    if not p.sigma > 0:
        raise DegenerateInputError(f"d-terms need sigma > 0, got {p.sigma}")
    vol_sqrt = p.sigma * math.sqrt(tau)
    d1 = (math.log(p.S / p.K) + (p.r + 0.5 * p.sigma**2) * tau) / vol_sqrt
    return d1, d1 - vol_sqrt


def price_call(p: OptionParams) -> float:
    disc_strike = p.K * math.exp(-p.r * p.T)
    if p.T == 0 or p.sigma == 0:
        return max(p.S - disc_strike, 0.0)
    d1, d2 = d_terms(p, p.T)
    return max(p.S * norm_cdf(d1) - disc_strike * norm_cdf(d2), 0.0)


def price_put(p: OptionParams) -> float:
    disc_strike = p.K * math.exp(-p.r * p.T)
    if p.T == 0 or p.sigma == 0:
        return max(disc_strike - p.S, 0.0)
    d1, d2 = d_terms(p, p.T)
    return max(disc_strike * norm_cdf(-d2) - p.S * norm_cdf(-d1), 0.0)


def put_values(p: OptionParams, tau: np.ndarray, strike_shift: float = 0.0) -> np.ndarray:
    """Vectorized put price over time-to-expiry points ``tau``.

    ``strike_shift`` is added to K inside the log-moneyness term only, which
    lets the dataset pipeline reproduce the ``ln(S / (K + eps))`` variant.
    The ``tau == 0`` entries take the intrinsic value ``max(K - S, 0)``
    explicitly instead of relying on infinities flowing through the CDF.
    """
    tau = np.asarray(tau, dtype=float)
    out = np.empty_like(tau)
    zero = tau == 0.0
    out[zero] = max(p.K - p.S, 0.0)
    t = tau[~zero]
    if t.size:
        vol_sqrt = p.sigma * np.sqrt(t)
        d1 = (math.log(p.S / (p.K + strike_shift)) + (p.r + p.sigma**2 / 2) * t) / vol_sqrt
        d2 = d1 - vol_sqrt
        vals = p.K * np.exp(-p.r * t) * ndtr(-d2) - p.S * ndtr(-d1)
        out[~zero] = np.maximum(vals, 0.0)
    return out


def put_path(p: OptionParams, n_grid: int = 1000) -> PricePath:
    """Put price on ``linspace(0, T, n_grid)`` in time to expiry."""
    if n_grid < 2:
        raise ValueError(f"n_grid must be >= 2, got {n_grid}")
    if p.sigma < EPS_GUARD or p.T < EPS_GUARD:
        raise DegenerateInputError(
            f"put path needs sigma and T >= {EPS_GUARD} (sigma={p.sigma}, T={p.T})"
        )
    tau = np.linspace(0.0, p.T, n_grid)
    return PricePath(tau_grid=tau, values=put_values(p, tau), delta_t=float(tau[1] - tau[0]))
