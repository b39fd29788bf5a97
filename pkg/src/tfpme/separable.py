"""Separate-variables solutions ``F(t) S(x)`` and the global Harnack band."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, SolverError, UnsupportedParameterError
from .fode import solve_scalar_fode
from .spectral_domain import Field, SpectralBasis
from .stepper import SolverConfig, Trajectory, _energy

log = logging.getLogger(__name__)

__all__ = [
    "solve_elliptic_profile",
    "separable_solution",
    "HarnackReport",
    "harnack_band",
    "separable_band_constants",
]


def _sobolev_threshold(basis: SpectralBasis) -> float:
    two_s = 2.0 * basis.s_power
    return (1.0 - two_s) / (1.0 + two_s)


def solve_elliptic_profile(basis: SpectralBasis, m: float, tol: float = 1e-9, max_iter: int = 2000) -> Field:
    """Positive solution of ``L S^m = S`` with zero boundary values.

    Normalized power iteration ``S <- (L^-1 S)^(1/m)`` from the constant
    profile, rescaled so the eigen-relation holds with constant one, then a
    Newton polish on ``w = S^m``.  For ``m == 1`` the problem is linear and
    solvable only when ``lambda_1 == 1``; then ``S = Phi_1``.  ``tol`` bounds
    the relative residual ``||L S^m - S||_2 / ||S||_2``.
    """
    if m <= 0:
        raise ConfigurationError(f"m must be positive, got {m}", key="m")
    if m <= _sobolev_threshold(basis):
        raise UnsupportedParameterError(f"m={m} is at or below the threshold {_sobolev_threshold(basis):.4f}")
    if m == 1.0:
        if abs(basis.eigenvalues[0] - 1.0) > 1e-12:
            raise UnsupportedParameterError(f"m=1 needs lambda_1 = 1, basis has {basis.eigenvalues[0]:.6g}")
        return basis.eigenfunction(1).synthesized()

    L = basis.operator_matrix
    Linv = basis.inverse_matrix
    q = 1.0 / m
    s = np.ones(basis.n_grid)
    for it in range(max_iter):
        nxt = np.maximum(Linv @ s, 0.0) ** q
        nxt /= nxt.max()
        change = np.max(np.abs(nxt - s))
        s = nxt
        if change < 1e-12:
            break
    else:
        log.debug("profile power iteration stopped after %d sweeps (change %.2e)", max_iter, change)

    # L s^m = mu s  ->  (kappa s) solves it with constant one for kappa = mu^(-1/(m-1))
    sm = s**m
    mu = float(np.dot(L @ sm, s) / np.dot(s, s))
    w = (mu ** (-1.0 / (m - 1.0)) * s) ** m

    def resid(w):
        return L @ w - np.abs(w) ** q

    G = resid(w)
    res = math.sqrt(basis.h) * np.linalg.norm(G)
    for _ in range(100):
        if res < 1e-3 * tol * math.sqrt(basis.h) * np.linalg.norm(w):
            break
        J = L - np.diag(q * np.abs(w) ** (q - 1.0))
        delta = np.linalg.solve(J, -G)
        lam = 1.0
        while True:
            trial = w + lam * delta
            Gt = resid(trial)
            rt = math.sqrt(basis.h) * np.linalg.norm(Gt)
            if rt < res or lam < 1e-8:
                break
            lam *= 0.5
        if not rt < res:
            break  # rounding floor
        w, G, res = trial, Gt, rt
    S = np.abs(w) ** q
    final = np.linalg.norm(L @ S**m - S) / np.linalg.norm(S)
    if not final < tol or np.any(S < 0):
        raise SolverError("elliptic profile did not converge", residual=final)
    return Field(basis, values=S)


def separable_solution(S: Field, F0: float, times, alpha: float, m: float) -> Trajectory:
    """Trajectory ``F(t_k) S`` where ``F`` solves the discrete ``D^alpha F = -F^m``, ``F(0) = F0``."""
    if F0 <= 0:
        raise ConfigurationError(f"F0 must be positive, got {F0}", key="F0")
    times = np.asarray(times, dtype=float)
    K = len(times) - 1
    if K < 1:
        raise ConfigurationError("need at least two time levels", key="times")
    tau = times[1] - times[0]
    if not np.allclose(np.diff(times), tau, rtol=1e-9, atol=0.0) or times[0] != 0.0:
        raise ConfigurationError("times must be a uniform grid starting at 0", key="times")
    sol = solve_scalar_fode(alpha, 1.0, m, F0, tau, K)
    basis = S.basis
    states = np.outer(sol.values, S.values)
    cfg = SolverConfig(alpha, m, tau, K)
    return Trajectory(
        basis, cfg, states, np.zeros(K + 1, dtype=int), np.zeros(K + 1), _energy(basis, states, m)
    )


@dataclass
class HarnackReport:
    times: np.ndarray
    band_inf: np.ndarray
    band_sup: np.ndarray
    envelope_lo: np.ndarray
    envelope_hi: np.ndarray
    c0: float
    c1: float
    violations: int

    @property
    def passed(self) -> bool:
        return self.violations == 0 and self.c0 > 0 and math.isfinite(self.c1)

    def rows(self):
        yield from zip(self.times, self.band_inf, self.band_sup, self.envelope_lo, self.envelope_hi)


def _band(traj: Trajectory, gamma: float) -> tuple[np.ndarray, np.ndarray]:
    m = traj.config.m
    ratio = np.abs(traj.states[1:]) ** m / traj.basis.dist**gamma
    return ratio.min(axis=1), ratio.max(axis=1)


def harnack_band(
    u_traj: Trajectory,
    gamma_over_m: float,
    c0: float | None = None,
    c1: float | None = None,
    rel_slack: float = 1e-9,
) -> HarnackReport:
    """Two-sided band for ``u^m / dist^gamma`` with ``gamma = m * gamma_over_m``.

    Envelopes are ``c0 / (1 + t^alpha)`` and ``c1 / t^alpha`` for ``t > 0``.
    Constants not supplied are fitted as the tightest ones on the grid (then
    the violation count is zero by construction and only ``c0 > 0`` carries
    information); supply a-priori constants, e.g. from
    :func:`separable_band_constants`, to make the count a real test.
    """
    cfg = u_traj.config
    gamma = cfg.m * gamma_over_m
    t = u_traj.times[1:]
    ta = t**cfg.alpha
    lo, hi = _band(u_traj, gamma)
    if c0 is None:
        c0 = float(np.min(lo * (1.0 + ta)))
    if c1 is None:
        c1 = float(np.max(hi * ta))
    env_lo = c0 / (1.0 + ta)
    env_hi = c1 / ta
    bad = (lo < env_lo * (1.0 - rel_slack)) | (hi > env_hi * (1.0 + rel_slack))
    return HarnackReport(t, lo, hi, env_lo, env_hi, c0, c1, int(np.count_nonzero(bad)))


def separable_band_constants(S: Field, u0: Field, alpha: float, m: float, tau: float, K: int, gamma: float = 1.0):
    """Harnack constants implied by sandwiching ``u0`` between two multiples of ``S``.

    With ``a S <= u0 <= b S`` comparison gives ``F_a(t) S <= u(t) <= F_b(t) S``,
    hence ``c0 = min_t F_a^m (1 + t^alpha) * min_x S^m / dist^gamma`` and
    ``c1 = max_t F_b^m t^alpha * max_x S^m / dist^gamma``.
    """
    s = S.values
    ratio = u0.values / s
    a, b = float(ratio.min()), float(ratio.max())
    if a <= 0:
        raise UnsupportedParameterError("u0 must dominate a positive multiple of S")
    prof = s**m / S.basis.dist**gamma
    lo = solve_scalar_fode(alpha, 1.0, m, a, tau, K)
    hi = solve_scalar_fode(alpha, 1.0, m, b, tau, K)
    ta = lo.times[1:] ** alpha
    c0 = float(np.min(lo.values[1:] ** m * (1.0 + ta))) * float(prof.min())
    c1 = float(np.max(hi.values[1:] ** m * ta)) * float(prof.max())
    return c0, c1
