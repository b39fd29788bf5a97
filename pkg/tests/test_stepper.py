import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tfpme.caputo_kernel import compute_weights, discrete_caputo
from tfpme.errors import ConfigurationError, HorizonError, SolverError
from tfpme.fode import mittag_leffler
from tfpme.spectral_domain import Field, apply_operator, build_interval_basis
from tfpme.stepper import SolverConfig, evolve, phi, solve_implicit, step


def _equation_residual(traj, k):
    """Independent check of (D U)_k + L phi(U_k) = 0, scaled like the solver residual."""
    b, cfg = traj.basis, traj.config
    w = compute_weights(cfg.alpha, cfg.n_steps)
    d = discrete_caputo(traj.states, w, cfg.tau, k)
    lphi = apply_operator(b, Field(b, values=phi(traj.states[k], cfg.m))).values
    return math.sqrt(b.h) * np.linalg.norm(d + lphi) * cfg.tau**cfg.alpha / w.c0


def test_phi_is_signed_power():
    np.testing.assert_allclose(phi(np.array([-4.0, 0.0, 9.0]), 0.5), [-2.0, 0.0, 3.0])


def test_single_linear_step_closed_form(pi_basis):
    alpha, tau = 0.5, 0.1
    cfg = SolverConfig(alpha, 1.0, tau, 1)
    traj = evolve(pi_basis.eigenfunction(1).synthesized(), cfg, pi_basis)
    c0 = math.gamma(1 + alpha)
    expected = c0 / (c0 + tau**alpha * 1.0)
    coeffs = Field(pi_basis, values=traj.states[1]).coeffs
    assert coeffs[0] == pytest.approx(expected, rel=1e-13)
    assert np.max(np.abs(coeffs[1:])) < 1e-13


@pytest.mark.parametrize("m", [0.5, 1.0, 2.0])
def test_zero_data_stays_zero(grid_basis, m):
    traj = evolve(Field(grid_basis, values=np.zeros(grid_basis.n_grid)), SolverConfig(0.4, m, 0.1, 20), grid_basis)
    assert np.all(traj.states == 0)


@pytest.mark.parametrize("m", [0.4, 2.0, 3.0])
def test_steps_satisfy_discrete_equation(grid_basis, m):
    rng = np.random.default_rng(11)
    x = grid_basis.grid
    u0 = np.exp(-((x - 1.3) ** 2) / 0.2) + 0.5 * rng.uniform(size=x.size) * np.sin(x)
    cfg = SolverConfig(0.6, m, 0.05, 40)
    traj = evolve(Field(grid_basis, values=u0), cfg, grid_basis)
    assert len(traj) == 41
    assert np.all(traj.residuals[1:] <= cfg.newton_tol)
    for k in (1, 2, 17, 40):
        assert _equation_residual(traj, k) < 1e2 * cfg.newton_tol


def test_sign_changing_data(grid_basis):
    u0 = grid_basis.eigenfunction(2).values
    for m in (0.5, 2.0):
        traj = evolve(Field(grid_basis, values=u0), SolverConfig(0.5, m, 0.05, 20), grid_basis)
        assert _equation_residual(traj, 20) < 1e-9
        # odd symmetry about the midpoint is preserved
        np.testing.assert_allclose(traj.states[-1], -traj.states[-1][::-1], atol=1e-10)


def test_linear_solution_approaches_mittag_leffler(pi_basis):
    u0 = pi_basis.eigenfunction(1).synthesized()
    errs = []
    for tau in (0.05, 0.01, 0.002):
        cfg = SolverConfig(0.5, 1.0, tau, int(round(1 / tau)))
        traj = evolve(u0, cfg, pi_basis)
        exact = mittag_leffler(0.5, -1.0) * u0.values
        errs.append(np.max(np.abs(traj.states[-1] - exact)))
    assert errs[0] > errs[1] > errs[2]
    assert errs[2] < 1e-3


def test_step_matches_evolve(grid_basis):
    u0 = Field(grid_basis, values=np.sin(grid_basis.grid) ** 2)
    cfg = SolverConfig(0.3, 2.0, 0.1, 6)
    traj = evolve(u0, cfg, grid_basis)
    w = compute_weights(0.3, 6)
    history = [u0]
    for k in range(1, 7):
        nxt, info = step(history, w, grid_basis, cfg, return_info=True)
        np.testing.assert_allclose(nxt.values, traj.states[k], atol=1e-13)
        assert info.residual <= cfg.newton_tol
        history.append(nxt)


def test_step_horizon_error(grid_basis):
    w = compute_weights(0.5, 2)
    u = Field(grid_basis, values=np.ones(grid_basis.n_grid))
    with pytest.raises(HorizonError):
        step([u, u, u], w, grid_basis, SolverConfig(0.5, 2.0, 0.1, 3))


def test_truncated_basis_projects_initial_data():
    b = build_interval_basis(1.0, 8, 64)
    u0 = Field(b, values=np.ones(b.n_grid))
    traj = evolve(u0, SolverConfig(0.5, 1.0, 0.1, 2), b)
    np.testing.assert_allclose(traj.states[0], b.synthesize(b.analyze(np.ones(b.n_grid))))


def test_solver_failure_reports_step(grid_basis):
    cfg = SolverConfig(0.5, 2.0, 0.1, 3, newton_tol=1e-300, newton_max_iter=2)
    with pytest.raises(SolverError) as err:
        evolve(Field(grid_basis, values=np.sin(grid_basis.grid)), cfg, grid_basis)
    assert err.value.step == 1
    assert "step 1" in str(err.value)


@pytest.mark.parametrize(
    "kwargs, key",
    [
        (dict(alpha=1.0, m=1.0, tau=0.1, n_steps=1), "alpha"),
        (dict(alpha=0.5, m=0.0, tau=0.1, n_steps=1), "m"),
        (dict(alpha=0.5, m=1.0, tau=0.0, n_steps=1), "tau"),
        (dict(alpha=0.5, m=1.0, tau=0.1, n_steps=0), "n_steps"),
        (dict(alpha=0.5, m=1.0, tau=0.1, n_steps=1, newton_tol=0.0), "newton_tol"),
    ],
)
def test_config_validation(kwargs, key):
    with pytest.raises(ConfigurationError) as err:
        SolverConfig(**kwargs)
    assert err.value.key == key


def test_solve_implicit_linear_is_exact(grid_basis):
    rhs = np.cos(grid_basis.grid) * np.sin(grid_basis.grid)
    u, info = solve_implicit(grid_basis, rhs, 0.3, SolverConfig(0.5, 1.0, 0.1, 1))
    assert info.method == "diagonal"
    np.testing.assert_allclose(u + 0.3 * grid_basis.operator_matrix @ u, rhs, atol=1e-12)


def test_norm_table_columns(grid_basis):
    traj = evolve(grid_basis.eigenfunction(1), SolverConfig(0.5, 2.0, 0.1, 5), grid_basis)
    table = traj.norm_table()
    assert list(table) == ["t", "l1", "l2", "linf", "l1_phi1", "hstar", "energy"]
    assert all(len(v) == 6 for v in table.values())
    assert table["hstar"][0] == pytest.approx(grid_basis.eigenvalues[0] ** -0.5, rel=1e-12)


pair_data = st.tuples(
    st.lists(st.floats(0, 2, allow_nan=False), min_size=3, max_size=3),
    st.lists(st.floats(0, 1, allow_nan=False), min_size=3, max_size=3),
    st.sampled_from([0.5, 2.0]),
    st.sampled_from([0.3, 0.7]),
)


@settings(max_examples=15, deadline=None)
@given(pair_data)
def test_order_energy_and_contraction(data):
    amps, extra, m, alpha = data
    b = build_interval_basis(math.pi, 24, spectrum="discrete")
    x = b.grid
    bumps = np.stack([np.exp(-((x - c) ** 2) / 0.1) for c in (0.8, 1.6, 2.4)])
    u0 = np.array(amps) @ bumps
    v0 = u0 + np.array(extra) @ bumps
    cfg = SolverConfig(alpha, m, 0.05, 40)
    u = evolve(Field(b, values=u0), cfg, b)
    v = evolve(Field(b, values=v0), cfg, b)
    assert np.max(u.states - v.states) <= 1e-10
    assert np.min(u.states) >= -1e-12
    for traj in (u, v):
        assert np.all(traj.energy <= traj.energy[0] + 1e-10)
    diff = v.states - u.states
    hstar = np.sqrt(np.sum((b.h * diff @ b.eigenfunctions.T) ** 2 / b.eigenvalues, axis=1))
    assert np.all(hstar <= hstar[0] + 1e-10)
