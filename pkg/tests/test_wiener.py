"""Tests for the hierarchical Brownian-path parametrization."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sllg import wiener
from sllg.wiener import (
    HierIndex,
    active_dimension,
    basis_sup_norm,
    basis_support,
    faber_schauder,
    hier_index,
    lc_coefficients,
    linear_index,
    param_norm_alpha,
    truncation_level,
    wiener_eval,
    wiener_on_dyadic,
)


# ---------------------------------------------------------------------------
# indexing


def test_linear_index_known_values():
    assert linear_index(HierIndex(0, 1)) == 0
    assert linear_index(HierIndex(1, 1)) == 1
    assert linear_index(HierIndex(2, 1)) == 2
    assert linear_index(HierIndex(2, 2)) == 3
    assert linear_index(HierIndex(3, 1)) == 4
    assert linear_index(HierIndex(4, 5)) == 12


def test_hier_index_known_values():
    assert hier_index(0) == HierIndex(0, 1)
    assert hier_index(1) == HierIndex(1, 1)
    assert hier_index(5) == HierIndex(3, 2)


@given(st.integers(min_value=0, max_value=10**6))
def test_index_roundtrip(n):
    assert linear_index(hier_index(n)) == n


def test_invalid_indices_rejected():
    with pytest.raises(ValueError):
        linear_index(HierIndex(1, 2))
    with pytest.raises(ValueError):
        linear_index(HierIndex(-1, 1))
    with pytest.raises(ValueError):
        linear_index(HierIndex(3, 0))
    with pytest.raises(ValueError):
        hier_index(-1)


# ---------------------------------------------------------------------------
# basis functions


def test_level0_is_identity():
    t = np.linspace(0, 1, 11)
    assert np.allclose(faber_schauder(HierIndex(0, 1), t), t)


def test_hat_peak_location_and_height():
    # peak of eta_{l,j} sits at the support midpoint with value 2^(-(l+1)/2)
    for level in range(1, 6):
        for position in (1, 2 ** (level - 1)):
            a, b = basis_support(HierIndex(level, position))
            mid = 0.5 * (a + b)
            val = faber_schauder(HierIndex(level, position), mid)
            assert val == pytest.approx(2.0 ** (-(level + 1) / 2), abs=1e-15)
            assert val == pytest.approx(basis_sup_norm(level), abs=1e-15)
            assert faber_schauder(HierIndex(level, position), a) == 0.0
            assert faber_schauder(HierIndex(level, position), b) == 0.0


def test_hat_vanishes_outside_support():
    h = HierIndex(3, 2)  # support (1/4, 1/2)
    t = np.array([0.0, 0.2, 0.55, 1.0])
    assert np.all(faber_schauder(h, t) == 0.0)


def test_same_level_supports_are_disjoint():
    level = 4
    for j in range(1, 2 ** (level - 1)):
        _, b = basis_support(HierIndex(level, j))
        a_next, _ = basis_support(HierIndex(level, j + 1))
        assert b == a_next


def test_faber_schauder_rejects_bad_time():
    with pytest.raises(ValueError):
        faber_schauder(HierIndex(1, 1), 1.5)
    with pytest.raises(ValueError):
        faber_schauder(HierIndex(1, 1), -0.1)


# ---------------------------------------------------------------------------
# evaluation


def test_wiener_eval_single_level0():
    assert wiener_eval([2.0], 0.25) == pytest.approx(0.5)


def test_wiener_eval_matches_basis_sum():
    rng = np.random.default_rng(7)
    y = rng.standard_normal(16)
    t = rng.uniform(0, 1, size=40)
    direct = sum(y[n] * faber_schauder(hier_index(n), t) for n in range(16))
    assert np.allclose(wiener_eval(y, t), direct, atol=1e-14)


def test_wiener_eval_partial_level():
    # truncation mid-level: absent coefficients act as zeros
    rng = np.random.default_rng(8)
    y = rng.standard_normal(6)  # levels 0..3, level 3 holds only 2 of 4 hats
    y_padded = np.concatenate([y, np.zeros(2)])
    t = np.linspace(0, 1, 33)
    assert np.allclose(wiener_eval(y, t), wiener_eval(y_padded, t), atol=0)


def test_wiener_eval_endpoint_values():
    rng = np.random.default_rng(9)
    y = rng.standard_normal(8)
    assert wiener_eval(y, 0.0) == 0.0
    assert wiener_eval(y, 1.0) == pytest.approx(y[0], abs=1e-15)


def test_wiener_eval_rejects_bad_time():
    with pytest.raises(ValueError):
        wiener_eval([1.0], 2.0)


def test_truncation_level():
    assert truncation_level(1) == 0
    assert truncation_level(2) == 1
    assert truncation_level(3) == 2
    assert truncation_level(4) == 2
    assert truncation_level(5) == 3
    assert truncation_level(16) == 4


# ---------------------------------------------------------------------------
# coefficient extraction


def test_lc_coefficients_frozen_example():
    # path linear in t plus one level-2 bump: y = (1, 0, 0.5, 0)
    y = np.array([1.0, 0.0, 0.5, 0.0])
    w = wiener_on_dyadic(y, 3)
    out = lc_coefficients(w, 2)
    assert np.allclose(out, y, atol=1e-14)


def test_lc_coefficients_level0_is_terminal_value():
    w = np.array([0.0, 0.3, -0.2])
    assert lc_coefficients(w, 0)[0] == pytest.approx(-0.2)


@settings(max_examples=25, deadline=None)
@given(st.integers(min_value=0, max_value=5), st.integers(min_value=0, max_value=2**31 - 1))
def test_lc_roundtrip_on_dyadic_grid(L, seed):
    # coefficients -> path samples -> coefficients is the identity
    rng = np.random.default_rng(seed)
    y = rng.standard_normal(2**L if L else 1)
    w = wiener_on_dyadic(y, L + 1)  # oversampled path
    assert np.allclose(lc_coefficients(w, L), y, atol=1e-12)


def test_lc_coefficients_rejects_too_many_levels():
    with pytest.raises(ValueError):
        lc_coefficients(np.zeros(5), 3)  # path resolves 2 levels only


def test_lc_coefficients_rejects_non_dyadic_length():
    with pytest.raises(ValueError):
        lc_coefficients(np.zeros(6), 1)


def test_reconstruction_interpolates_between_dyadic_points():
    # W(y, .) is piecewise linear between level-L dyadic nodes once y has
    # 2^L entries, so evaluation at finer points is the linear interpolant
    rng = np.random.default_rng(11)
    y = rng.standard_normal(8)  # resolves levels 0..3
    w = wiener_on_dyadic(y, 3)
    t = np.linspace(0, 1, 97)
    expected = np.interp(t, np.arange(9) / 8.0, w)
    assert np.allclose(wiener_eval(y, t), expected, atol=1e-14)


# ---------------------------------------------------------------------------
# weighted norm


def test_param_norm_alpha_frozen_example():
    assert param_norm_alpha([0.0, 3.0], alpha=0.0) == pytest.approx(3.0 / math.sqrt(2.0))


def test_param_norm_alpha_level_maxima():
    # levels contribute their max weighted by 2^(-(1-alpha) l / 2)
    y = np.array([1.0, -2.0, 0.5, -4.0])
    expected = 1.0 + 2.0 * 2.0 ** (-0.5) + 4.0 * 2.0 ** (-1.0)
    assert param_norm_alpha(y, 0.0) == pytest.approx(expected)
    expected_half = 1.0 + 2.0 * 2.0 ** (-0.25) + 4.0 * 2.0 ** (-0.5)
    assert param_norm_alpha(y, 0.5) == pytest.approx(expected_half)


def test_param_norm_alpha_rejects_bad_alpha():
    with pytest.raises(ValueError):
        param_norm_alpha([1.0], alpha=1.0)
    with pytest.raises(ValueError):
        param_norm_alpha([1.0], alpha=-0.1)


@given(st.floats(min_value=0.0, max_value=0.99), st.integers(min_value=1, max_value=64))
def test_param_norm_alpha_monotone_in_alpha(alpha, dim):
    rng = np.random.default_rng(dim)
    y = rng.standard_normal(dim)
    # larger alpha weakens the decay, so the norm cannot shrink
    assert param_norm_alpha(y, alpha) >= param_norm_alpha(y, 0.0) - 1e-12


# ---------------------------------------------------------------------------
# helpers


def test_active_dimension():
    assert active_dimension(1.0) == 1
    assert active_dimension(0.5) == 2
    assert active_dimension(2.0**-6) == 64
    with pytest.raises(ValueError):
        active_dimension(0.3)


def test_active_dimension_is_sharp():
    # a coefficient just beyond the active range never moves W on the grid
    tau = 2.0**-3
    dim = active_dimension(tau)
    t = np.arange(0, 9) * tau
    y = np.zeros(dim + 1)
    y[dim] = 5.0
    assert np.allclose(wiener_eval(y, t), 0.0, atol=0)
    # while the last active coefficient does
    y = np.zeros(dim)
    y[dim - 1] = 5.0
    assert np.max(np.abs(wiener_eval(y, t))) > 0
