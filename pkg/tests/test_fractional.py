import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from fracbsm.fractional import (
    _lanczos,
    FractionalOrder,
    Series,
    gamma_fn,
    lag_weights,
    rl_fractional_derivative,
    rl_fractional_derivative_fast,
)

# mpmath.gamma(0.3) at 40 digits
GAMMA_0_3 = 2.9915689876875906


def close(fast, ref):
    return np.all(np.abs(fast - ref) <= np.maximum(1e-9 * np.abs(ref), 1e-12))


@pytest.mark.parametrize("n", range(1, 11))
def test_gamma_factorials(n):
    assert gamma_fn(n + 1) == pytest.approx(math.factorial(n), rel=1e-10)


@pytest.mark.parametrize("n", range(0, 11))
def test_lanczos_on_integers(n):
    # the public function short-circuits integers; the series itself must hold up too
    assert _lanczos(n + 1.0) == pytest.approx(math.factorial(n), rel=1e-10)


def test_gamma_known_values():
    assert gamma_fn(1) == 1.0
    assert gamma_fn(5) == 24.0
    assert gamma_fn(0.5) == pytest.approx(math.sqrt(math.pi), rel=1e-10)
    assert gamma_fn(0.3) == pytest.approx(GAMMA_0_3, rel=1e-10)


def test_gamma_against_mpmath_on_unit_to_five():
    mpmath = pytest.importorskip("mpmath")
    mpmath.mp.dps = 30
    for x in np.concatenate([np.geomspace(1e-6, 1, 300), np.linspace(1, 5, 400)]):
        ref = float(mpmath.gamma(float(x)))
        assert abs(gamma_fn(float(x)) - ref) <= 1e-10 * ref


@pytest.mark.parametrize("x", [0.0, -1.0, -0.5, math.nan])
def test_gamma_domain(x):
    with pytest.raises(ValueError):
        gamma_fn(x)


@pytest.mark.parametrize("alpha", [-0.1, 1.0, 1.5])
def test_order_range(alpha):
    with pytest.raises(ValueError):
        FractionalOrder(alpha)


def test_order_zero_is_test_mode():
    assert FractionalOrder(0.0).is_test_mode
    assert not FractionalOrder(0.5).is_test_mode


def test_series_validation():
    with pytest.raises(ValueError):
        Series([], 1.0)
    with pytest.raises(ValueError):
        Series([1.0, math.inf], 1.0)
    with pytest.raises(ValueError):
        Series([1.0], 0.0)


def test_reference_examples():
    s = Series([1.0, 1.0, 1.0], 1.0)
    assert rl_fractional_derivative(s, 0.0).tolist() == [0.0, 1.0, 2.0]
    out = rl_fractional_derivative(Series([1.0, 0.0], 1.0), 0.5)
    assert out[0] == 0.0
    assert out[1] == pytest.approx(1 / math.sqrt(math.pi), rel=1e-12)


def test_reference_matches_hand_sum():
    c = [0.3, -1.2, 2.5, 0.7]
    alpha, dt = 0.35, 0.2
    out = rl_fractional_derivative(Series(c, dt), alpha)
    # i = 3: weights 3^-a, 2^-a, 1^-a on c[0], c[1], c[2]
    hand = (3**-alpha * c[0] + 2**-alpha * c[1] + 1 * c[2]) / math.gamma(1 - alpha) * dt**-alpha
    assert out[3] == pytest.approx(hand, rel=1e-13)


def test_single_point_series():
    s = Series([4.0], 0.1)
    assert rl_fractional_derivative(s, 0.4).tolist() == [0.0]
    assert rl_fractional_derivative_fast(s, 0.4).tolist() == [0.0]


def test_lag_weights():
    w = lag_weights(5, 0.5)
    assert w[0] == 0.0
    np.testing.assert_allclose(w[1:], [1, 2**-0.5, 3**-0.5, 0.5], rtol=1e-15)


def test_fast_matches_reference_long_series():
    rng = np.random.default_rng(0)
    s = Series(rng.normal(size=1000), 1e-3)
    assert close(rl_fractional_derivative_fast(s, 0.5), rl_fractional_derivative(s, 0.5))


def test_fast_alpha_zero_is_exact():
    rng = np.random.default_rng(1)
    s = Series(rng.normal(size=300), 0.7)
    assert np.array_equal(rl_fractional_derivative_fast(s, 0.0), rl_fractional_derivative(s, 0.0))


def test_fast_zero_series():
    assert not np.any(rl_fractional_derivative_fast(Series(np.zeros(64), 0.1), 0.6))


@settings(max_examples=40, deadline=None)
@given(
    c=arrays(np.float64, st.integers(1, 80), elements=st.floats(-1e3, 1e3)),
    alpha=st.floats(0.0, 0.99),
    dt=st.floats(1e-4, 10.0),
)
def test_fast_equivalence_property(c, alpha, dt):
    s = Series(c, dt)
    ref = rl_fractional_derivative(s, alpha)
    fast = rl_fractional_derivative_fast(s, alpha)
    assert fast[0] == 0.0 == ref[0]
    # the FFT error scales with the sum of absolute terms, not the (possibly cancelled) result
    scale = rl_fractional_derivative(Series(np.abs(c), dt), alpha)
    assert np.all(np.abs(fast - ref) <= np.maximum(1e-9 * np.abs(ref), 1e-12 + 1e-13 * scale))


def test_alpha_zero_prefix_sum():
    rng = np.random.default_rng(2)
    c = rng.uniform(0.1, 2.0, 500)
    out = rl_fractional_derivative(Series(c, 1.0), 0.0)
    expected = np.concatenate([[0.0], np.cumsum(c)[:-1]])
    assert np.all(np.abs(out - expected) <= 1e-12 * np.abs(expected))


def test_linearity():
    rng = np.random.default_rng(4)
    for _ in range(10):
        x = rng.uniform(0.1, 2.0, 200)
        y = rng.uniform(0.1, 2.0, 200)
        a, b = rng.uniform(0.1, 3.0, 2)
        alpha = rng.uniform(0.05, 0.95)
        lhs = rl_fractional_derivative(Series(a * x + b * y, 0.01), alpha)
        rhs = a * rl_fractional_derivative(Series(x, 0.01), alpha) + b * rl_fractional_derivative(Series(y, 0.01), alpha)
        assert np.all(np.abs(lhs - rhs) <= 1e-12 * np.abs(rhs))


def test_linearity_mixed_signs():
    rng = np.random.default_rng(6)
    x, y = rng.normal(size=(2, 200))
    a, b = -1.7, 0.4
    alpha = 0.45
    lhs = rl_fractional_derivative(Series(a * x + b * y, 0.05), alpha)
    rhs = a * rl_fractional_derivative(Series(x, 0.05), alpha) + b * rl_fractional_derivative(Series(y, 0.05), alpha)
    bound = rl_fractional_derivative(Series(abs(a) * np.abs(x) + abs(b) * np.abs(y), 0.05), alpha)
    assert np.all(np.abs(lhs - rhs) <= 1e-12 * bound)


@pytest.mark.parametrize("s_factor", [0.5, 2.0, 13.0])
def test_spacing_scaling(s_factor):
    rng = np.random.default_rng(8)
    c = rng.uniform(0.1, 2.0, 300)
    alpha = 0.7
    base = rl_fractional_derivative(Series(c, 0.01), alpha)
    scaled = rl_fractional_derivative(Series(c, 0.01 * s_factor), alpha)
    assert np.all(np.abs(scaled - s_factor**-alpha * base) <= 1e-12 * np.abs(scaled))


@settings(max_examples=25, deadline=None)
@given(c=arrays(np.float64, st.integers(1, 50), elements=st.floats(-1e6, 1e6)), alpha=st.floats(0.0, 0.99))
def test_first_entry_is_zero(c, alpha):
    assert rl_fractional_derivative(Series(c, 0.3), alpha)[0] == 0.0
    assert rl_fractional_derivative_fast(Series(c, 0.3), alpha)[0] == 0.0
