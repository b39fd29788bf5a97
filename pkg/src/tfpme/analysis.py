"""Quantitative checks on computed trajectories.

Each function reduces a trajectory (or a pair of them) to a number or a small
report: ordering violations, monotonicity of rescaled solutions, decay slopes,
contraction of distances, and the boundary behaviour of ``u^m``.  Everything
here is a pure function of its inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, UnsupportedParameterError
from .spectral_domain import green_matrix, lp_norm
from .stepper import Trajectory, phi

__all__ = [
    "SlopeFit",
    "ContractivityReport",
    "BoundaryReport",
    "check_comparison",
    "check_monotonicity",
    "check_energy_decay",
    "check_non_extinction",
    "fit_decay_slope",
    "pointwise_formula_residual",
    "check_contractivity",
    "check_boundary",
]


def _same_grid(u: Trajectory, v: Trajectory) -> None:
    bu, bv = u.basis, v.basis
    if bu is not bv and (
        bu.n_grid != bv.n_grid or bu.length != bv.length or not np.array_equal(bu.eigenvalues, bv.eigenvalues)
    ):
        raise ConfigurationError("trajectories live on different spatial grids", key="basis")
    if u.states.shape != v.states.shape or not np.allclose(u.times, v.times, rtol=1e-12, atol=0.0):
        raise ConfigurationError("trajectories live on different time grids", key="tau")


def check_comparison(u_traj: Trajectory, v_traj: Trajectory) -> float:
    """``max_{k, x} (U_k - V_k)_+``; zero when the order of the data is preserved."""
    _same_grid(u_traj, v_traj)
    return float(max(np.max(u_traj.states - v_traj.states), 0.0))


def check_monotonicity(traj: Trajectory, alpha: float | None = None, m: float | None = None) -> float:
    """Largest pointwise break of monotonicity of the rescaled solution.

    For ``m > 1`` the sequence ``t_k^(alpha/(m-1)) U_k`` should be
    nondecreasing in ``k``; for ``m < 1`` the sequence
    ``t_k^(-alpha/(1-m)) U_k`` should be nonincreasing.  ``k = 0`` is skipped.
    """
    alpha = traj.config.alpha if alpha is None else alpha
    m = traj.config.m if m is None else m
    if m == 1.0:
        raise UnsupportedParameterError("no rescaled monotonicity for m = 1")
    t = traj.times[1:]
    if len(t) < 2:
        return 0.0
    scaled = traj.states[1:] * (t ** (alpha / (m - 1.0)))[:, None]
    jumps = np.diff(scaled, axis=0)
    worst = -jumps.min() if m > 1.0 else jumps.max()
    return float(max(worst, 0.0))


def check_energy_decay(traj: Trajectory) -> float:
    """``max_k E(U_k) - E(U_0)``; nonpositive when the energy never grows above its start."""
    return float(np.max(traj.energy - traj.energy[0]))


def check_non_extinction(traj: Trajectory) -> tuple[float, int | None]:
    """Smallest ``||U_k||_1`` over the run and the first index where it vanishes (``None`` if never)."""
    l1 = traj.basis.h * np.abs(traj.states).sum(axis=1)
    dead = np.flatnonzero(l1 <= 0.0)
    return float(l1.min()), (int(dead[0]) if dead.size else None)


@dataclass(frozen=True)
class SlopeFit:
    slope: float
    intercept: float
    t_min: float
    t_max: float
    n_points: int
    extinct: bool = False

    def relative_error(self, expected: float) -> float:
        return abs(self.slope - expected) / abs(expected)


def fit_decay_slope(times, norms, window: tuple[float, float] | None = None) -> SlopeFit:
    """Least-squares slope of ``log norm`` against ``log t`` on ``window``.

    The default window is the last decade ``[t_end / 10, t_end]``.  A norm
    that vanishes inside the window is reported with ``extinct=True`` and a
    NaN slope instead of raising.
    """
    times = np.asarray(times, dtype=float)
    norms = np.asarray(norms, dtype=float)
    if times.shape != norms.shape:
        raise ConfigurationError("times and norms differ in length", key="norms")
    if window is None:
        window = (times[-1] / 10.0, times[-1])
    lo, hi = window
    if not 0.0 < lo < hi:
        raise ConfigurationError(f"window must satisfy 0 < lo < hi, got {window}", key="window")
    sel = (times >= lo) & (times <= hi)
    n = int(sel.sum())
    if n < 2:
        raise ConfigurationError(f"window {window} holds {n} samples", key="window")
    if np.any(norms[sel] <= 0.0):
        return SlopeFit(math.nan, math.nan, lo, hi, n, extinct=True)
    slope, intercept = np.polyfit(np.log(times[sel]), np.log(norms[sel]), 1)
    return SlopeFit(float(slope), float(intercept), lo, hi, n)


def pointwise_formula_residual(traj: Trajectory, basis=None, x0_index: int | None = None, t_index: int = -1) -> float:
    """Relative mismatch of the Green-function identity at ``(x0, t_k)``.

    Left side ``int (u_0 - u(t)) G(x0, x) dx`` by grid quadrature; right side
    ``Gamma(alpha)^-1 int_0^t phi(u)(s, x0) (t - s)^(alpha-1) ds`` integrated
    exactly against ``phi(U_j)`` held constant on ``(t_{j-1}, t_j]``.
    Returns ``|LHS - RHS| / (|LHS| + |RHS|)``, or 0 when both sides vanish.
    """
    basis = traj.basis if basis is None else basis
    cfg = traj.config
    K = len(traj) - 1
    k = K + t_index + 1 if t_index < 0 else t_index
    if not 0 <= k <= K:
        raise ConfigurationError(f"t_index {t_index} outside 0..{K}", key="t_index")
    j0 = basis.n_grid // 2 if x0_index is None else x0_index
    if not 0 <= j0 < basis.n_grid:
        raise ConfigurationError(f"x0_index {x0_index} outside the grid", key="x0_index")
    if k == 0:
        return 0.0
    x0 = basis.grid[j0]
    G = green_matrix(basis, x0)
    lhs = basis.h * float(np.dot(traj.states[0] - traj.states[k], G))
    t = traj.times
    gap = t[k] - t[: k + 1]
    w = (gap[:-1] ** cfg.alpha - gap[1:] ** cfg.alpha) / math.gamma(cfg.alpha + 1.0)
    rhs = float(np.dot(w, phi(traj.states[1 : k + 1, j0], cfg.m)))
    denom = abs(lhs) + abs(rhs)
    return 0.0 if denom == 0.0 else abs(lhs - rhs) / denom


@dataclass(frozen=True)
class ContractivityReport:
    l1_phi1: np.ndarray  # ||(U_k - V_k)_+||_{L^1_{Phi_1}}
    hstar: np.ndarray  # ||U_k - V_k||_{H*}
    l1_growth: float
    hstar_growth: float

    def passed(self, tol: float = 1e-8) -> bool:
        return self.l1_growth <= tol and self.hstar_growth <= tol


def check_contractivity(u_traj: Trajectory, v_traj: Trajectory) -> ContractivityReport:
    """Weighted L^1 norm of the positive part and H* norm of ``U_k - V_k`` at every step."""
    _same_grid(u_traj, v_traj)
    b = u_traj.basis
    d = u_traj.states - v_traj.states
    l1 = b.h * np.maximum(d, 0.0) @ b.phi1
    coeffs = b.h * d @ b.eigenfunctions.T
    hs = np.sqrt(np.sum(coeffs**2 / b.eigenvalues, axis=1))
    return ContractivityReport(l1, hs, float(np.max(l1 - l1[0])), float(np.max(hs - hs[0])))


@dataclass(frozen=True)
class BoundaryReport:
    times: np.ndarray
    sup_ratio: np.ndarray  # sup_x u^m / dist^gamma
    exponent: float  # fitted power of t on the last decade
    kappa: float  # max_k sup_ratio * t^alpha / ||u_0||_p

    @property
    def finite(self) -> bool:
        return bool(np.all(np.isfinite(self.sup_ratio))) and math.isfinite(self.kappa)


def check_boundary(traj: Trajectory, gamma: float = 1.0, p: float = 1.0, window=None) -> BoundaryReport:
    """Size of ``u^m / dist^gamma`` near the boundary and its decay in time."""
    cfg = traj.config
    b = traj.basis
    t = traj.times[1:]
    ratio = np.abs(traj.states[1:]) ** cfg.m / b.dist**gamma
    sup = ratio.max(axis=1)
    u0 = float(lp_norm(b, traj.states[0], p))
    if u0 == 0.0:
        return BoundaryReport(t, sup, math.nan, 0.0)
    fit = fit_decay_slope(t, sup, window)
    kappa = float(np.max(sup * t**cfg.alpha)) / u0
    return BoundaryReport(t, sup, fit.slope, kappa)
