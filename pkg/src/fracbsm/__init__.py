"""Fractional-feature Black-Scholes-Merton option pricing with a numpy MLP regressor."""

from .bsm import OptionParams, PricePath, d_terms, norm_cdf, price_call, price_put, put_path
from .fractional import (
    FractionalOrder,
    Series,
    gamma_fn,
    rl_fractional_derivative,
    rl_fractional_derivative_fast,
)

__version__ = "0.1.0"
