"""Scalar fractional ODEs: Mittag-Leffler and Kilbas-Saigo functions, discrete solvers, decay envelopes."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import mpmath
import numpy as np
from scipy import integrate, special

from .caputo_kernel import compute_weights
from .errors import ConfigurationError, SolverError

__all__ = [
    "FodeSolution",
    "mittag_leffler",
    "kilbas_saigo",
    "solve_scalar_fode",
    "solve_kilbas_fode",
    "decay_envelope",
    "classical_ode_solution",
    "classical_extinction_time",
    "kilbas_reference",
]

_SERIES_RADIUS = 1.0


def _ml_series(alpha: float, x: float) -> float:
    total = 0.0
    k = 0
    while True:
        term = math.exp(k * math.log(abs(x)) - special.gammaln(alpha * k + 1.0)) if x != 0 else float(k == 0)
        if x < 0 and k % 2:
            term = -term
        total += term
        if k > 5 and abs(term) < 1e-17 * max(abs(total), 1e-300):
            return total
        k += 1
        if k > 5000:
            raise SolverError("Mittag-Leffler series did not converge", residual=abs(term))


def _ml_negative(alpha: float, x: float) -> float:
    # E_a(-x) = sin(a pi) / (a pi) * int_0^inf exp(-v^(1/a)) / (x (y^2 + 2 y cos(a pi) + 1)) dv,  y = v / x
    # (spectral density of the completely monotone E_a(-t^a) after substituting v = r^a t^a)
    s, c = math.sin(alpha * math.pi), math.cos(alpha * math.pi)
    p = 1.0 / alpha

    def g(v):
        y = v / x
        return math.exp(-(v**p)) / (x * (y * y + 2.0 * y * c + 1.0))

    vmax = 745.0**alpha  # exp(-v^(1/a)) underflows beyond
    cuts = sorted({0.0, vmax} | {b for b in (1.0, 0.5 * x, x, 2.0 * x) if b < vmax})
    total = 0.0
    for lo, hi in zip(cuts, cuts[1:]):
        part, _ = integrate.quad(g, lo, hi, epsabs=0.0, epsrel=1e-13, limit=200)
        total += part
    return s / (alpha * math.pi) * total


def mittag_leffler(alpha: float, x):
    """One-parameter Mittag-Leffler function ``E_alpha(x) = sum_k x^k / Gamma(alpha k + 1)``.

    Taylor series for ``|x| <= 1`` and for positive ``x``; on the negative axis
    beyond that, the Laplace-type integral of its completely monotone spectral
    density, which has no cancellation.
    """
    if not 0.0 < alpha <= 1.0:
        raise ConfigurationError(f"alpha must lie in (0, 1], got {alpha}", key="alpha")
    xs = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(xs)):
        raise ConfigurationError("x must be finite", key="x")
    if alpha == 1.0:
        out = np.exp(xs)
    else:
        flat = [
            _ml_series(alpha, v) if (v >= 0 or -v <= _SERIES_RADIUS) else _ml_negative(alpha, -v)
            for v in xs.ravel()
        ]
        out = np.array(flat).reshape(xs.shape)
    return float(out) if out.ndim == 0 else out


def _check_ks(alpha: float, r: float, l: float) -> None:
    if not 0.0 < alpha <= 1.0:
        raise ConfigurationError(f"alpha must lie in (0, 1], got {alpha}", key="alpha")
    if r <= 0:
        raise ConfigurationError(f"r must be positive, got {r}", key="r")
    if l <= r - 1.0 / alpha:
        raise ConfigurationError(f"l must exceed r - 1/alpha = {r - 1.0 / alpha}, got {l}", key="l")


def kilbas_saigo(alpha: float, r: float, l: float, x, tol: float = 1e-12, max_digits: int = 3000):
    """Kilbas-Saigo function ``E_{alpha,r,l}(x) = sum_k c_k x^k`` with

    ``c_0 = 1`` and ``c_k = prod_{j<k} Gamma(alpha(j r + l) + 1) / Gamma(alpha(j r + l + 1) + 1)``.

    Summed in extended precision sized to the largest term so alternating
    series do not lose digits; terms are dropped once below ``tol`` relative
    to the running sum.
    """
    _check_ks(alpha, r, l)
    xs = np.asarray(x, dtype=float)
    out = np.array([_ks_scalar(alpha, r, l, float(v), tol, max_digits) for v in xs.ravel()]).reshape(xs.shape)
    return float(out) if out.ndim == 0 else out


def _ks_log_terms(alpha, r, l, ax, n):
    j = np.arange(n, dtype=float)
    a = alpha * (j * r + l)
    logratio = special.gammaln(a + 1.0) - special.gammaln(a + alpha + 1.0)
    logc = np.concatenate([[0.0], np.cumsum(logratio)])
    return logc + np.arange(n + 1) * math.log(ax)


def _ks_scalar(alpha, r, l, x, tol, max_digits):
    if x == 0.0:
        return 1.0
    ax = abs(x)
    # on the negative axis the sum is of size ~ 1/(1+|x|), far below its largest
    # terms; on the positive axis it dominates every term
    floor = -math.log1p(ax) if x < 0 else None
    n = 64
    while True:
        logt = _ks_log_terms(alpha, r, l, ax, n)
        scale = logt.max() if floor is None else floor
        if logt[-1] < scale + math.log(tol) - 10.0 and np.all(np.diff(logt[-8:]) < 0):
            break
        n *= 2
        if n > 10**6:
            raise SolverError("Kilbas-Saigo series too long", residual=float("nan"))
    digits = int((logt.max() + math.log1p(ax)) / math.log(10.0)) + 30
    if digits > max_digits:
        raise ConfigurationError(f"|x|={ax} needs {digits} digits for the series", key="x")
    with mpmath.workdps(max(digits, 30)):
        total = mpmath.mpf(1)
        coef = mpmath.mpf(1)
        z = mpmath.mpf(x)
        power = mpmath.mpf(1)
        # parameters must be exact in the working precision: a relative 1e-16
        # error in a coefficient is amplified by the size of the largest term
        am, rm, lm = mpmath.mpf(alpha), mpmath.mpf(r), mpmath.mpf(l)
        for k in range(1, n + 1):
            a = am * ((k - 1) * rm + lm)
            coef *= mpmath.gamma(a + 1) / mpmath.gamma(a + am + 1)
            power *= z
            term = coef * power
            total += term
            if logt[k] < logt[: k + 1].max() and abs(term) < tol * abs(total) * 1e-3:
                break
        return float(total)


def decay_envelope(alpha: float, m: float, t):
    """``1 / (1 + t^(alpha/m))``."""
    t = np.asarray(t, dtype=float)
    out = 1.0 / (1.0 + t ** (alpha / m))
    return float(out) if out.ndim == 0 else out


def classical_ode_solution(lam: float, m: float, v0: float, t):
    """Closed-form solution of ``v' = -lam v^m``, ``v(0) = v0`` (first-order time derivative)."""
    t = np.asarray(t, dtype=float)
    if m == 1.0:
        out = v0 * np.exp(-lam * t)
    elif m < 1.0:
        base = np.maximum(v0 ** (1.0 - m) - lam * (1.0 - m) * t, 0.0)
        out = base ** (1.0 / (1.0 - m))
    else:
        out = (v0 ** (1.0 - m) + lam * (m - 1.0) * t) ** (-1.0 / (m - 1.0))
    return float(out) if out.ndim == 0 else out


def classical_extinction_time(lam: float, m: float, v0: float) -> float:
    """Finite extinction time of the classical ODE when ``m < 1``; ``inf`` otherwise."""
    if m >= 1.0 or lam <= 0:
        return math.inf
    return v0 ** (1.0 - m) / (lam * (1.0 - m))


@dataclass
class FodeSolution:
    alpha: float
    lam: float
    m: float
    v0: float
    tau: float
    times: np.ndarray
    values: np.ndarray
    beta: float = 0.0
    c1: float = field(init=False)
    c2: float = field(init=False)

    def __post_init__(self) -> None:
        self.fit_envelope()

    def fit_envelope(self) -> tuple[float, float]:
        """Tightest ``c1, c2`` with ``c1 <= v (1 + t^(alpha/m)) <= c2`` on the computed grid."""
        scaled = self.values / decay_envelope(self.alpha, self.m, self.times)
        self.c1, self.c2 = float(scaled.min()), float(scaled.max())
        return self.c1, self.c2

    def envelope(self) -> tuple[np.ndarray, np.ndarray]:
        env = decay_envelope(self.alpha, self.m, self.times)
        return self.c1 * env, self.c2 * env


def _scalar_root(a: float, rhs: float, lam: float, m: float, guess: float) -> float:
    """Root of ``a (v - rhs) + lam v^m`` on ``(0, rhs]`` by safeguarded Newton."""
    lo, hi = 0.0, rhs
    v = min(max(guess, 0.5 * rhs), rhs)
    scale = a * rhs
    for _ in range(200):
        f = a * (v - rhs) + lam * v**m
        if abs(f) <= 1e-15 * scale:
            return v
        if f > 0:
            hi = v
        else:
            lo = v
        df = a + lam * m * v ** (m - 1.0) if v > 0 else math.inf
        nxt = v - f / df
        if not lo < nxt < hi:
            nxt = 0.5 * (lo + hi)
        if abs(nxt - v) <= 4e-16 * v:
            return nxt
        v = nxt
    raise SolverError("scalar root finder did not converge", residual=abs(f) / scale)


def solve_scalar_fode(alpha: float, lam: float, m: float, v0: float, tau: float, K: int) -> FodeSolution:
    """Discrete solution of ``D^alpha v = -lam v^m`` on ``t_k = k tau``, k = 0..K.

    Each step solves ``(c_0 / tau^alpha)(v_k - R_k) + lam v_k^m = 0`` where
    ``R_k`` collects the history; the root is bracketed in ``(0, R_k]``.
    """
    if v0 <= 0:
        raise ConfigurationError(f"v0 must be positive, got {v0}", key="v0")
    if lam < 0:
        raise ConfigurationError(f"lambda must be nonnegative, got {lam}", key="lambda")
    if m <= 0:
        raise ConfigurationError(f"m must be positive, got {m}", key="m")
    if tau <= 0:
        raise ConfigurationError(f"tau must be positive, got {tau}", key="tau")
    w = compute_weights(alpha, K)
    a = w.c0 / tau**alpha
    v = np.empty(K + 1)
    v[0] = v0
    c = w.c
    for k in range(1, K + 1):
        hist = w.tail[k] * v0
        if k > 1:
            hist += np.dot(c[1:k], v[k - 1 : 0 : -1])
        rhs = hist / w.c0
        if lam == 0.0:
            v[k] = rhs
        elif m == 1.0:
            v[k] = a * rhs / (a + lam)
        else:
            try:
                v[k] = _scalar_root(a, rhs, lam, m, v[k - 1])
            except SolverError as exc:
                raise SolverError(str(exc), residual=exc.residual, step=k) from exc
    times = tau * np.arange(K + 1)
    return FodeSolution(alpha, lam, m, v0, tau, times, v)


def solve_kilbas_fode(alpha: float, beta: float, lam: float, v0: float, tau: float, K: int) -> FodeSolution:
    """Discrete solution of ``D^alpha v = -lam t^beta v`` with the coefficient frozen at ``t_k``."""
    if beta <= -alpha:
        raise ConfigurationError(f"beta must exceed -alpha, got {beta}", key="beta")
    if tau <= 0:
        raise ConfigurationError(f"tau must be positive, got {tau}", key="tau")
    w = compute_weights(alpha, K)
    a = w.c0 / tau**alpha
    times = tau * np.arange(K + 1)
    v = np.empty(K + 1)
    v[0] = v0
    for k in range(1, K + 1):
        hist = w.tail[k] * v0
        if k > 1:
            hist += np.dot(w.c[1:k], v[k - 1 : 0 : -1])
        v[k] = hist / (a + lam * times[k] ** beta) * (a / w.c0)
    return FodeSolution(alpha, lam, 1.0, v0, tau, times, v, beta=beta)


def kilbas_reference(alpha: float, beta: float, lam: float, v0: float, t):
    """Exact solution ``v0 E_{alpha, 1+beta/alpha, beta/alpha}(-lam t^(alpha+beta))``."""
    return v0 * kilbas_saigo(alpha, 1.0 + beta / alpha, beta / alpha, -lam * np.asarray(t, dtype=float) ** (alpha + beta))
