import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tfpme.errors import ConfigurationError, DimensionError, DomainError
from tfpme.spectral_domain import (
    Field,
    apply_inverse,
    apply_operator,
    build_interval_basis,
    green_kernel_eval,
    green_matrix,
    lp_norm,
    norms,
)


def test_eigenvalues_on_pi_interval():
    b = build_interval_basis(math.pi, 3)
    np.testing.assert_allclose(b.eigenvalues, [1.0, 4.0, 9.0], rtol=1e-14)


def test_first_eigenvalue_unit_interval():
    b = build_interval_basis(1.0, 4)
    assert b.eigenvalues[0] == pytest.approx(math.pi**2, rel=1e-14)


def test_fractional_power_eigenvalue():
    b = build_interval_basis(math.pi, 4, s_power=0.4)
    assert b.eigenvalues[1] == pytest.approx(4.0**0.4, rel=1e-14)
    assert b.eigenvalues[1] == pytest.approx(1.7411011, abs=1e-7)


@pytest.mark.parametrize("spectrum", ["exact", "discrete"])
def test_basis_invariants(spectrum):
    b = build_interval_basis(2.0, 12, 30, s_power=0.7, spectrum=spectrum)
    assert np.all(np.diff(b.eigenvalues) > 0) and b.eigenvalues[0] > 0
    gram = b.h * b.eigenfunctions @ b.eigenfunctions.T
    np.testing.assert_allclose(gram, np.eye(12), atol=1e-13)
    assert np.all(b.phi1 >= 0)
    assert not b.eigenfunctions.flags.writeable


def test_discrete_spectrum_matches_three_point_laplacian():
    b = build_interval_basis(1.0, 20, spectrum="discrete")
    n, h = b.n_grid, b.h
    A = (np.diag(2 * np.ones(n)) - np.diag(np.ones(n - 1), 1) - np.diag(np.ones(n - 1), -1)) / h**2
    np.testing.assert_allclose(b.operator_matrix, A, atol=1e-9 * np.abs(A).max())


@pytest.mark.parametrize(
    "kwargs, key",
    [
        (dict(length=0.0, n_modes=4), "length"),
        (dict(length=1.0, n_modes=0), "n_modes"),
        (dict(length=1.0, n_modes=8, n_grid=4), "n_grid"),
        (dict(length=1.0, n_modes=4, s_power=1.5), "s_power"),
        (dict(length=1.0, n_modes=4, spectrum="chebyshev"), "spectrum"),
    ],
)
def test_invalid_basis_names_key(kwargs, key):
    with pytest.raises(ConfigurationError) as err:
        build_interval_basis(**kwargs)
    assert err.value.key == key


def test_operator_on_eigenfunctions(pi_basis):
    b = pi_basis
    f = b.eigenfunction(1)
    np.testing.assert_allclose(apply_operator(b, f).values, f.values, atol=1e-13)
    g = b.eigenfunction(1) + b.eigenfunction(2)
    expected = b.eigenfunction(1).values + 4.0 * b.eigenfunction(2).values
    np.testing.assert_allclose(apply_operator(b, g).values, expected, atol=1e-12)
    assert np.all(apply_operator(b, b.field(np.zeros(b.n_grid))).values == 0)


def test_inverse_on_eigenfunctions(pi_basis):
    b = pi_basis
    np.testing.assert_allclose(apply_inverse(b, b.eigenfunction(1)).values, b.eigenfunction(1).values, atol=1e-13)
    np.testing.assert_allclose(
        apply_inverse(b, b.eigenfunction(2)).values, b.eigenfunction(2).values / 4.0, atol=1e-13
    )


def test_dimension_mismatch_rejected(pi_basis):
    other = build_interval_basis(math.pi, 16)
    with pytest.raises(DimensionError):
        apply_operator(pi_basis, other.eigenfunction(1))
    with pytest.raises(DimensionError):
        pi_basis.eigenfunction(1) + other.eigenfunction(1)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(-5, 5, allow_nan=False), min_size=32, max_size=32))
def test_operator_inverse_roundtrip(coeffs):
    b = build_interval_basis(math.pi, 32)
    f = Field(b, coeffs=np.array(coeffs))
    back = apply_operator(b, apply_inverse(b, f))
    np.testing.assert_allclose(back.coeffs, f.coeffs, atol=1e-12)
    # analysis after synthesis is the identity on the span
    np.testing.assert_allclose(Field(b, values=f.values).coeffs, f.coeffs, atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(-5, 5, allow_nan=False), min_size=12, max_size=12))
def test_inverse_is_bounded_by_first_eigenvalue(coeffs):
    b = build_interval_basis(1.0, 12, 48, s_power=0.6)
    c = np.array(coeffs)
    out = apply_inverse(b, Field(b, coeffs=c)).coeffs
    assert np.linalg.norm(out) <= np.linalg.norm(c) / b.eigenvalues[0] * (1 + 1e-12) + 1e-300


def test_zero_coeffs_give_zero_values(pi_basis):
    f = Field(pi_basis, coeffs=np.zeros(pi_basis.n_modes))
    assert np.all(f.values == 0)


def test_parseval_on_fine_grid():
    b = build_interval_basis(math.pi, 10, 200)
    rng = np.random.default_rng(1)
    c = rng.normal(size=10)
    f = Field(b, coeffs=c)
    assert lp_norm(b, f.values, 2) == pytest.approx(np.linalg.norm(c), rel=1e-12)


def test_green_midpoint_value():
    b = build_interval_basis(1.0, 16)
    assert green_kernel_eval(b, 0.5, 0.5) == pytest.approx(0.25, abs=1e-15)


@settings(max_examples=60, deadline=None)
@given(st.floats(0.001, 0.999), st.floats(0.001, 0.999))
def test_green_symmetry_and_bounds(x, y):
    b = build_interval_basis(1.0, 16)
    g = green_kernel_eval(b, x, y)
    assert g == green_kernel_eval(b, y, x)
    assert g <= 0.25 + 1e-15
    assert g >= x * (1 - x) * y * (1 - y) - 1e-15


def test_fractional_green_is_symmetric_positive():
    b = build_interval_basis(1.0, 400, s_power=0.75)
    g = green_kernel_eval(b, 0.3, 0.6)
    assert g == pytest.approx(green_kernel_eval(b, 0.6, 0.3), rel=1e-13)
    assert g > 0


def test_green_matrix_inverts_grid_operator():
    b = build_interval_basis(1.0, 31, spectrum="discrete")
    j = 10
    G = green_matrix(b, b.grid[j])
    # h * sum_i G(x_j, x_i) f_i equals (L^-1 f)(x_j) for the three-point operator
    f = np.random.default_rng(0).normal(size=b.n_grid)
    assert b.h * G @ f == pytest.approx((b.inverse_matrix @ f)[j], rel=1e-10)


def test_green_outside_domain():
    b = build_interval_basis(1.0, 8)
    with pytest.raises(DomainError):
        green_kernel_eval(b, 0.0, 0.5)
    with pytest.raises(DomainError):
        green_kernel_eval(b, 0.5, 1.2)


def test_norms_of_first_eigenfunction(pi_basis):
    r = norms(pi_basis, pi_basis.eigenfunction(1), m=2.0, p=(3,))
    assert r.hstar == pytest.approx(1.0, abs=1e-13)
    assert r.l2 == pytest.approx(1.0, abs=1e-13)
    assert r.l1_phi1 == pytest.approx(1.0, abs=1e-13)
    assert r.h == pytest.approx(1.0, abs=1e-13)
    assert r.linf == pytest.approx(math.sqrt(2 / math.pi) * math.cos(math.pi / 66), rel=1e-13)  # grid misses x = pi/2
    assert set(r.lp) == {3}


def test_norms_of_zero(pi_basis):
    r = norms(pi_basis, Field(pi_basis, values=np.zeros(pi_basis.n_grid)), m=2.0)
    assert r.l1 == r.l2 == r.linf == r.l1_phi1 == r.h == r.hstar == r.energy == 0.0


def test_norm_rejects_p_below_one(pi_basis):
    with pytest.raises(ConfigurationError):
        norms(pi_basis, pi_basis.eigenfunction(1), p=0.5)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(0, 3, allow_nan=False), min_size=32, max_size=32))
def test_weighted_l1_bounded_by_hstar(vals):
    b = build_interval_basis(math.pi, 32)
    r = norms(b, Field(b, values=np.array(vals)))
    assert r.l1_phi1 <= math.sqrt(b.eigenvalues[0]) * r.hstar * (1 + 1e-12) + 1e-14
