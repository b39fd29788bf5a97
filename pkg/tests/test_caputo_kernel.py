import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tfpme.caputo_kernel import (
    _recursion,
    compute_weights,
    discrete_caputo,
    discrete_caputo_alt,
    history_combination,
    kernel_convolution,
    kernel_ell,
    kernel_k,
)
from tfpme.errors import ConfigurationError, DomainError, HorizonError
from tfpme.spectral_domain import Field, build_interval_basis


def test_formal_unit_alpha_recursion():
    # at alpha = 1 every a_j = 1 and the recursion collapses to backward Euler
    np.testing.assert_array_equal(_recursion(1.0, 3), [1.0, 1.0, 0.0, 0.0])


def test_first_weights_half():
    w = compute_weights(0.5, 4)
    assert w.c0 == pytest.approx(0.886226925452758, rel=1e-15)
    assert w.c[1] == pytest.approx((math.sqrt(2) - 1) * math.gamma(1.5), rel=1e-15)
    assert w.c[1] == pytest.approx(0.36708721, abs=1e-8)


def _mp_weights(alpha, K):
    with mpmath.workdps(50):
        a = [mpmath.mpf(j + 1) ** alpha - mpmath.mpf(j) ** alpha for j in range(K + 1)]
        c = [mpmath.gamma(1 + mpmath.mpf(alpha))]
        for i in range(1, K + 1):
            c.append(a[i] * c[0] - mpmath.fsum(a[i - j] * c[j] for j in range(1, i)))
        return [float(v) for v in c]


@pytest.mark.parametrize("alpha", [0.1, 0.37, 0.9])
def test_weights_match_extended_precision(alpha):
    K = 150
    w = compute_weights(alpha, K)
    ref = np.array(_mp_weights(alpha, K))
    # the recursion cancels O(1) terms, so accuracy is absolute (relative to c_0)
    np.testing.assert_allclose(w.c, ref, rtol=0, atol=1e-13 * w.c0)
    np.testing.assert_allclose(w.c, ref, rtol=1e-7)


@pytest.mark.parametrize("alpha", [0.05, 0.5, 0.95])
def test_weight_invariants(alpha):
    K = 3000
    w = compute_weights(alpha, K)
    assert np.all(w.c > 0)
    assert np.all(w.tail[1:] > 0)
    assert np.all(np.diff(w.c[1:]) < 0)
    partial = w.partial_sums()[2:]
    assert np.all(np.diff(partial) > 0) and np.all(partial < w.c0)
    for k in (1, 2, 10, K):
        assert w.tail[k] + math.fsum(w.c[1:k]) == pytest.approx(w.c0, rel=1e-13)


def test_weights_are_deconvolution_of_rectangle_rule():
    # U_k - U_0 = tau^alpha / Gamma(1+alpha) sum_j a_{k-j} (D U)_j for any history
    alpha, tau, K = 0.4, 0.3, 60
    w = compute_weights(alpha, K)
    rng = np.random.default_rng(3)
    hist = rng.normal(size=K + 1)
    d = np.array([discrete_caputo(hist, w, tau, k) for k in range(1, K + 1)])
    a = np.diff(np.arange(K + 1, dtype=float) ** alpha)
    for k in range(1, K + 1):
        recon = tau**alpha / math.gamma(1 + alpha) * np.dot(a[:k][::-1], d[:k])
        assert recon == pytest.approx(hist[k] - hist[0], abs=1e-11)


def test_cache_slices_consistently():
    big = compute_weights(0.61, 500)
    small = compute_weights(0.61, 50)
    np.testing.assert_array_equal(big.c[:51], small.c)
    assert small.horizon == 50


@pytest.mark.parametrize("alpha", [0.0, 1.0, -0.2, 1.3])
def test_alpha_outside_open_interval(alpha):
    with pytest.raises(ConfigurationError) as err:
        compute_weights(alpha, 10)
    assert err.value.key == "alpha"


def test_bad_horizon():
    with pytest.raises(ConfigurationError):
        compute_weights(0.5, 0)


def test_constant_history_has_zero_derivative():
    w = compute_weights(0.3, 20)
    assert discrete_caputo([2.5] * 21, w, 0.1, 20) == 0.0


def test_first_step_derivative():
    alpha, tau = 0.7, 0.05
    w = compute_weights(alpha, 5)
    got = discrete_caputo([1.0, 0.4], w, tau, 1)
    assert got == pytest.approx(math.gamma(1 + alpha) / tau**alpha * (0.4 - 1.0), rel=1e-14)


def test_horizon_error():
    w = compute_weights(0.5, 5)
    with pytest.raises(HorizonError):
        discrete_caputo(np.zeros(10), w, 0.1, 8)
    with pytest.raises(HorizonError):
        discrete_caputo(np.zeros(3), w, 0.1, 4)


@settings(max_examples=80, deadline=None)
@given(
    st.floats(0.05, 0.95),
    st.lists(st.floats(-10, 10, allow_nan=False), min_size=2, max_size=40),
    st.floats(1e-3, 2.0),
)
def test_two_forms_agree(alpha, hist, tau):
    k = len(hist) - 1
    w = compute_weights(alpha, 64)
    a = discrete_caputo(hist, w, tau, k)
    b = discrete_caputo_alt(hist, w, tau, k)
    assert a == pytest.approx(b, rel=1e-10, abs=1e-10 * tau**-alpha * max(1.0, max(map(abs, hist))))


def test_two_forms_agree_brute_force():
    # literal double loops, no vectorization
    alpha, tau, K = 0.45, 0.2, 25
    w = compute_weights(alpha, K)
    x = np.random.default_rng(5).normal(size=K + 1)
    for k in range(1, K + 1):
        first = w.tail[k] * (x[k] - x[0])
        second = w.c[0] * (x[k] - x[0])
        for i in range(1, k):
            first += w.c[i] * (x[k] - x[k - i])
            second -= w.c[i] * (x[k - i] - x[0])
        assert discrete_caputo(x, w, tau, k) == pytest.approx(first / tau**alpha, rel=1e-12, abs=1e-12)
        assert discrete_caputo_alt(x, w, tau, k) == pytest.approx(second / tau**alpha, rel=1e-12, abs=1e-12)


def test_field_and_array_histories():
    b = build_interval_basis(1.0, 8)
    w = compute_weights(0.5, 4)
    rng = np.random.default_rng(2)
    arrs = [rng.normal(size=b.n_grid) for _ in range(4)]
    out = discrete_caputo([Field(b, values=a) for a in arrs], w, 0.1, 3)
    assert isinstance(out, Field)
    np.testing.assert_allclose(out.values, discrete_caputo(np.array(arrs), w, 0.1, 3), rtol=1e-14)
    np.testing.assert_allclose(
        out.values, [discrete_caputo([a[j] for a in arrs], w, 0.1, 3) for j in range(b.n_grid)], rtol=1e-13
    )


def test_history_combination_matches_definition():
    w = compute_weights(0.3, 10)
    states = np.random.default_rng(4).normal(size=(8, 3))
    k = 7
    expect = w.tail[k] * states[0] + sum(w.c[i] * states[k - i] for i in range(1, k))
    np.testing.assert_allclose(history_combination(w, states, k), expect, rtol=1e-13)


@settings(max_examples=200, deadline=None)
@given(
    st.floats(0.05, 0.95),
    st.lists(st.floats(-100, 100, allow_nan=False), min_size=2, max_size=30),
    st.floats(1e-3, 1.0),
)
def test_chain_rule_inequality(alpha, hist, tau):
    w = compute_weights(alpha, 64)
    x = np.array(hist)
    k = len(x) - 1
    du = discrete_caputo(x, w, tau, k)
    for h, dh in ((lambda v: v * v, lambda v: 2 * v), (lambda v: np.maximum(v, 0) ** 2, lambda v: 2 * max(v, 0))):
        lhs = discrete_caputo(h(x), w, tau, k)
        rhs = dh(x[k]) * du
        assert lhs <= rhs + 1e-12 * (abs(lhs) + abs(rhs) + 1.0)


@settings(max_examples=60, deadline=None)
@given(st.floats(0.05, 0.95), st.integers(0, 2**32 - 1))
def test_nonpositive_derivative_keeps_below_start(alpha, seed):
    rng = np.random.default_rng(seed)
    K, tau = 40, 0.1
    w = compute_weights(alpha, K)
    x = np.empty(K + 1)
    x[0] = rng.normal()
    targets = -np.abs(rng.normal(size=K + 1)) * rng.integers(0, 2, size=K + 1)
    for k in range(1, K + 1):
        # forward substitution so that (D x)_k = targets[k] <= 0
        x[k] = (tau**alpha * targets[k] + history_combination(w, x, k)) / w.c0
        assert discrete_caputo(x, w, tau, k) == pytest.approx(targets[k], abs=1e-10)
    assert np.all(x <= x[0] + 1e-12)


def test_kernel_values():
    assert kernel_k(1.0, 0.5) == pytest.approx(1 / math.sqrt(math.pi), rel=1e-15)
    assert kernel_ell(1.0, 0.5) == pytest.approx(0.5641896, abs=1e-7)
    np.testing.assert_allclose(kernel_k(np.array([1.0, 4.0]), 0.5), [1 / math.sqrt(math.pi), 0.5 / math.sqrt(math.pi)])


@pytest.mark.parametrize("alpha", [0.1, 0.5, 0.9])
@pytest.mark.parametrize("t", [0.3, 1.0, 17.0])
def test_kernels_are_convolution_inverses(alpha, t):
    assert kernel_convolution(t, alpha) == pytest.approx(1.0, abs=1e-4)


@pytest.mark.parametrize("fn", [kernel_k, kernel_ell])
def test_kernels_reject_nonpositive_time(fn):
    with pytest.raises(DomainError):
        fn(0.0, 0.5)
    with pytest.raises(DomainError):
        kernel_convolution(-1.0, 0.5)
