"""Implicit time stepping for ``D^alpha u = -L (|u|^(m-1) u)`` with zero Dirichlet data.

Step ``k`` solves, on the grid,

    U_k - R_k + theta L phi(U_k) = 0,   theta = tau^alpha / c_0,
    R_k = (c_k^k U_0 + sum_{i=1}^{k-1} c_i U_{k-i}) / c_0,

which is the Euler-Lagrange equation of the minimizing-movement problem
``min_u  c_0/(2 tau^alpha) ||u - R_k||_{H*}^2 + E(u)``.  The scheme is
non-Markovian: every step reads the whole history.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .caputo_kernel import CaputoWeights, compute_weights, history_combination
from .errors import ConfigurationError, SolverError, WeightIntegrityError
from .spectral_domain import Field, SpectralBasis, lp_norm

log = logging.getLogger(__name__)

__all__ = ["SolverConfig", "StepInfo", "Trajectory", "phi", "step", "evolve"]


def phi(u: np.ndarray, m: float) -> np.ndarray:
    """Signed power ``|u|^(m-1) u``."""
    return np.sign(u) * np.abs(u) ** m


@dataclass(frozen=True)
class SolverConfig:
    alpha: float
    m: float
    tau: float
    n_steps: int
    newton_tol: float = 1e-11
    newton_max_iter: int = 50
    eps: float = 1e-10

    def __post_init__(self) -> None:
        if not 0.0 < self.alpha < 1.0:
            raise ConfigurationError(f"must lie in (0, 1), got {self.alpha}", key="alpha")
        if not self.m > 0:
            raise ConfigurationError(f"must be positive, got {self.m}", key="m")
        if not self.tau > 0:
            raise ConfigurationError(f"must be positive, got {self.tau}", key="tau")
        if int(self.n_steps) != self.n_steps or self.n_steps < 1:
            raise ConfigurationError(f"must be a positive integer, got {self.n_steps}", key="n_steps")
        if not self.newton_tol > 0:
            raise ConfigurationError(f"must be positive, got {self.newton_tol}", key="newton_tol")

    @property
    def t_final(self) -> float:
        return self.n_steps * self.tau

    @property
    def times(self) -> np.ndarray:
        return self.tau * np.arange(self.n_steps + 1)


@dataclass(frozen=True)
class StepInfo:
    iterations: int
    residual: float
    method: str


@dataclass
class Trajectory:
    basis: SpectralBasis
    config: SolverConfig
    states: np.ndarray  # (K+1, n_grid) nodal values
    iterations: np.ndarray = field(repr=False)
    residuals: np.ndarray = field(repr=False)
    energy: np.ndarray = field(repr=False)

    @property
    def times(self) -> np.ndarray:
        return self.config.times

    def __len__(self) -> int:
        return len(self.states)

    def field(self, k: int) -> Field:
        return Field(self.basis, values=self.states[k])

    def norm_series(self, p: float) -> np.ndarray:
        return lp_norm(self.basis, self.states, p)

    def norm_table(self) -> dict[str, np.ndarray]:
        """Columns t, l1, l2, linf, l1_phi1, hstar, energy for every state."""
        b = self.basis
        coeffs = b.h * self.states @ b.eigenfunctions.T
        absu = np.abs(self.states)
        return {
            "t": self.times,
            "l1": b.h * absu.sum(axis=1),
            "l2": lp_norm(b, self.states, 2),
            "linf": absu.max(axis=1),
            "l1_phi1": b.h * absu @ b.phi1,
            "hstar": np.sqrt(np.sum(coeffs**2 / b.eigenvalues, axis=1)),
            "energy": self.energy,
        }


def _energy(basis: SpectralBasis, u: np.ndarray, m: float):
    return basis.h * np.sum(np.abs(u) ** (1.0 + m), axis=-1) / (1.0 + m)


def _residual(basis, u, rhs, theta, m) -> tuple[np.ndarray, float]:
    F = u - rhs + theta * (basis.operator_matrix @ phi(u, m))
    return F, math.sqrt(basis.h) * float(np.linalg.norm(F))


def _solve_linear(basis, rhs, theta):
    c = basis.analyze(rhs)
    damp = theta * basis.eigenvalues / (1.0 + theta * basis.eigenvalues)
    return rhs - basis.synthesize(damp * c)


def _newton_degenerate(basis, rhs, theta, cfg, guess):
    """Newton on U for m > 1; phi'(U) = m |U|^(m-1) stays bounded."""
    m = cfg.m
    L = basis.operator_matrix
    n = len(rhs)
    u = guess.copy()
    F, res = _residual(basis, u, rhs, theta, m)
    for it in range(1, cfg.newton_max_iter + 1):
        if res <= cfg.newton_tol:
            return u, it - 1, res
        J = np.eye(n) + theta * L * (m * np.abs(u) ** (m - 1.0))
        delta = np.linalg.solve(J, -F)
        lam = 1.0
        while True:
            trial = u + lam * delta
            Ft, rt = _residual(basis, trial, rhs, theta, m)
            if rt < (1.0 - 1e-4 * lam) * res or lam < 1e-6:
                break
            lam *= 0.5
        u, F, res = trial, Ft, rt
    if res <= cfg.newton_tol:
        return u, cfg.newton_max_iter, res
    raise SolverError("Newton did not converge", residual=res)


def _newton_singular(basis, rhs, theta, cfg, guess):
    """Newton on w = phi(U) for m < 1, where U = |w|^(1/m - 1) w is C^1."""
    m = cfg.m
    q = 1.0 / m
    L = basis.operator_matrix
    w = phi(guess, m)

    def resid(w):
        u = phi(w, q)
        F = u - rhs + theta * (L @ w)
        return u, F, math.sqrt(basis.h) * float(np.linalg.norm(F))

    u, F, res = resid(w)
    for it in range(1, cfg.newton_max_iter + 1):
        if res <= cfg.newton_tol:
            return u, it - 1, res
        # eps keeps the Jacobian invertible where w = 0 on a truncated basis
        J = theta * L + np.diag(q * np.abs(w) ** (q - 1.0) + cfg.eps)
        delta = np.linalg.solve(J, -F)
        lam = 1.0
        while True:
            trial = w + lam * delta
            ut, Ft, rt = resid(trial)
            if rt < (1.0 - 1e-4 * lam) * res or lam < 1e-6:
                break
            lam *= 0.5
        w, u, F, res = trial, ut, Ft, rt
    if res <= cfg.newton_tol:
        return u, cfg.newton_max_iter, res
    raise SolverError("Newton did not converge", residual=res)


def _picard(basis, rhs, theta, cfg, guess):
    """Lagged-diffusivity fixed point, used when Newton stalls."""
    m = cfg.m
    L = basis.operator_matrix
    n = len(rhs)
    u = guess.copy()
    res = math.inf
    for it in range(1, 20 * cfg.newton_max_iter + 1):
        d = np.abs(u) ** (m - 1.0) if m >= 1 else (np.abs(u) + cfg.eps) ** (m - 1.0)
        u = np.linalg.solve(np.eye(n) + theta * L * d, rhs)
        _, res = _residual(basis, u, rhs, theta, m)
        if res <= cfg.newton_tol:
            return u, it, res
    raise SolverError("fixed-point fallback did not converge", residual=res)


def solve_implicit(basis: SpectralBasis, rhs: np.ndarray, theta: float, cfg: SolverConfig, guess=None):
    """Solve ``U + theta L phi(U) = rhs``; returns ``(U, StepInfo)``."""
    if cfg.m == 1.0:
        u = _solve_linear(basis, rhs, theta)
        _, res = _residual(basis, u, rhs, theta, 1.0)
        return u, StepInfo(0, res, "diagonal")
    guess = rhs if guess is None else guess
    newton = _newton_degenerate if cfg.m > 1.0 else _newton_singular
    try:
        u, its, res = newton(basis, rhs, theta, cfg, guess)
        return u, StepInfo(its, res, "newton")
    except SolverError as exc:
        log.debug("Newton failed (%s); trying fixed point", exc)
    u, its, res = _picard(basis, rhs, theta, cfg, guess)
    return u, StepInfo(its, res, "picard")


def _as_states(history, basis: SpectralBasis) -> np.ndarray:
    if isinstance(history, np.ndarray):
        return np.atleast_2d(history)
    return np.stack([h.values if isinstance(h, Field) else np.asarray(h, dtype=float) for h in history])


def step(history, weights: CaputoWeights, basis: SpectralBasis, config: SolverConfig, return_info: bool = False):
    """Compute ``U_k`` from ``history = [U_0, ..., U_{k-1}]`` (fields or nodal arrays)."""
    states = _as_states(history, basis)
    k = len(states)
    if k == 0:
        raise ConfigurationError("history must contain at least U_0", key="history")
    weights.check(k)
    if not weights.tail[k] > 0:
        raise WeightIntegrityError(f"tail c_{k}^{k} = {weights.tail[k]} is not positive")
    rhs = history_combination(weights, states, k) / weights.c0
    theta = config.tau**weights.alpha / weights.c0
    u, info = solve_implicit(basis, rhs, theta, config, guess=states[-1])
    out = Field(basis, values=u)
    return (out, info) if return_info else out


def evolve(
    u0: Field,
    config: SolverConfig,
    basis: SpectralBasis,
    weights: CaputoWeights | None = None,
) -> Trajectory:
    """Run the scheme from ``u0`` for ``config.n_steps`` steps, keeping the full history."""
    if weights is None:
        weights = compute_weights(config.alpha, config.n_steps)
    if weights.alpha != config.alpha:
        raise ConfigurationError("weights were computed for a different alpha", key="alpha")
    K = config.n_steps
    weights.check(K)
    n = basis.n_grid
    states = np.empty((K + 1, n))
    u0v = u0.values if basis.complete else basis.synthesize(u0.coeffs)
    states[0] = u0v
    iters = np.zeros(K + 1, dtype=int)
    resid = np.zeros(K + 1)
    theta = config.tau**config.alpha / weights.c0
    for k in range(1, K + 1):
        rhs = history_combination(weights, states, k) / weights.c0
        try:
            u, info = solve_implicit(basis, rhs, theta, config, guess=states[k - 1])
        except SolverError as exc:
            raise SolverError("solve failed", residual=exc.residual, step=k) from exc
        states[k] = u
        iters[k] = info.iterations
        resid[k] = info.residual
    energy = _energy(basis, states, config.m)
    return Trajectory(basis, config, states, iters, resid, energy)
