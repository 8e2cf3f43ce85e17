"""Logarithmic mean: exact values, bounds, and the guarded near-equal branch."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mskinet.means import SWITCH_GAP, log_mean


def test_log_mean_of_one_and_e():
    # (e - 1) / (log e - log 1) = e - 1
    assert log_mean(1.0, math.e) == pytest.approx(math.e - 1.0, rel=1e-14)


def test_log_mean_equal_arguments():
    for a in (1e-12, 0.5, 1.0, 7.25, 1e14):
        assert log_mean(a, a) == pytest.approx(a, rel=1e-14)


def test_log_mean_symmetry_and_bounds():
    rng = np.random.default_rng(11)
    a = rng.uniform(0.1, 10.0, size=200)
    b = rng.uniform(0.1, 10.0, size=200)
    lm = log_mean(a, b)
    np.testing.assert_allclose(lm, log_mean(b, a), rtol=1e-14)
    geo = np.sqrt(a * b)
    ari = 0.5 * (a + b)
    assert np.all(lm >= geo * (1.0 - 1e-13))
    assert np.all(lm <= ari * (1.0 + 1e-13))


def test_log_mean_factorization_identity():
    # logmean(a, b) * (log a - log b) recovers a - b when the gap is resolved
    rng = np.random.default_rng(12)
    a = rng.uniform(0.5, 4.0, size=100)
    b = a * np.exp(rng.uniform(1.0, 3.0, size=100) * rng.choice([-1, 1], 100))
    prod = log_mean(a, b) * (np.log(a) - np.log(b))
    np.testing.assert_allclose(prod, a - b, rtol=1e-13)


def test_log_mean_continuous_across_switch():
    # the quotient branch loses ~eps/gap relative accuracy at the crossover,
    # so agreement there is bounded by eps/SWITCH_GAP ~ 2e-8, not exact
    a = 1.3
    for sign in (+1.0, -1.0):
        just_above = a * math.exp(sign * 1.01 * SWITCH_GAP)
        just_below = a * math.exp(sign * 0.99 * SWITCH_GAP)
        v1 = log_mean(a, just_above)
        v2 = log_mean(a, just_below)
        assert v1 == pytest.approx(v2, rel=1e-7)


def test_log_mean_tiny_gap_accuracy():
    # below the switch the series value stays within double rounding of the
    # geometric mean times the even correction
    a = 2.0
    b = a * math.exp(1e-9)
    x = 0.5e-9
    expected = math.sqrt(a * b) * (1.0 + x * x / 6.0)
    assert log_mean(a, b) == pytest.approx(expected, rel=1e-15)


def test_log_mean_homogeneity():
    rng = np.random.default_rng(13)
    a = rng.uniform(0.1, 5.0, size=50)
    b = rng.uniform(0.1, 5.0, size=50)
    for c in (1e-6, 3.0, 1e6):
        np.testing.assert_allclose(log_mean(c * a, c * b), c * log_mean(a, b),
                                   rtol=1e-13)


def test_log_mean_rejects_nonpositive():
    with pytest.raises(ValueError):
        log_mean(0.0, 1.0)
    with pytest.raises(ValueError):
        log_mean(1.0, -2.0)
    with pytest.raises(ValueError):
        log_mean(np.array([1.0, 0.0]), np.array([1.0, 1.0]))


def test_log_mean_scalar_returns_float():
    out = log_mean(2.0, 3.0)
    assert isinstance(out, float)


def test_log_mean_broadcasts():
    a = np.array([[1.0, 2.0], [3.0, 4.0]])
    lm = log_mean(a, 2.0)
    assert lm.shape == (2, 2)
    assert lm[0, 1] == pytest.approx(2.0, rel=1e-14)


@settings(max_examples=200, deadline=None)
@given(
    st.floats(min_value=1e-20, max_value=1e20),
    st.floats(min_value=1e-20, max_value=1e20),
)
def test_log_mean_between_min_and_max(a, b):
    lm = log_mean(a, b)
    assert min(a, b) * (1.0 - 1e-12) <= lm <= max(a, b) * (1.0 + 1e-12)
    assert log_mean(b, a) == lm
