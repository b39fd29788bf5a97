"""Deconvolution weights for the Caputo derivative and the discrete derivative itself.

With ``a_j = (j+1)^alpha - j^alpha`` the weights of the piecewise-constant
Riemann-Liouville integral, the derivative weights are the convolution inverse
of ``a`` (scaled by ``Gamma(1+alpha)``) with the signs of ``c_i`` (``i >= 1``)
flipped::

    c_0 = Gamma(1 + alpha)
    c_i = a_i c_0 - sum_{j=1}^{i-1} a_{i-j} c_j,   i >= 1

All ``c_i`` are positive and decreasing and ``sum_{i>=1} c_i = c_0``, so the
tail ``c_k^k = sum_{i>=k} c_i`` is the exact complement
``c_0 - sum_{i=1}^{k-1} c_i``.  The discrete derivative at step ``k`` is::

    (D U)_k = tau^-alpha [ c_k^k (U_k - U_0) + sum_{i=1}^{k-1} c_i (U_k - U_{k-i}) ]
            = tau^-alpha [ c_0 (U_k - U_0) - sum_{i=1}^{k-1} c_i (U_{k-i} - U_0) ]

Both forms are provided; they agree to rounding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .errors import ConfigurationError, DomainError, HorizonError, WeightIntegrityError
from .spectral_domain import Field

__all__ = [
    "CaputoWeights",
    "compute_weights",
    "discrete_caputo",
    "discrete_caputo_alt",
    "history_combination",
    "kernel_k",
    "kernel_ell",
    "kernel_convolution",
]


@dataclass(frozen=True)
class CaputoWeights:
    alpha: float
    horizon: int
    c: np.ndarray  # c_0 .. c_K
    tail: np.ndarray  # tail[k] = c_k^k for k = 1..K; tail[0] = c_0 by convention

    @property
    def c0(self) -> float:
        return float(self.c[0])

    def partial_sums(self) -> np.ndarray:
        """``S[k] = sum_{i=1}^{k-1} c_i`` for k = 0..K (S[0] = S[1] = 0)."""
        return self.c0 - self.tail

    def check(self, k: int) -> None:
        if k > self.horizon:
            raise HorizonError(f"step {k} exceeds weight horizon {self.horizon}")

    def truncated(self, K: int) -> "CaputoWeights":
        self.check(K)
        return CaputoWeights(self.alpha, K, self.c[: K + 1], self.tail[: K + 1])


_CACHE: dict[float, CaputoWeights] = {}


def _recursion(alpha: float, K: int) -> np.ndarray:
    a = np.diff(np.arange(K + 2, dtype=float) ** alpha)
    a_rev = a[::-1].copy()  # a_rev[K - i] == a[i]
    c = np.empty(K + 1)
    c[0] = math.gamma(1.0 + alpha)
    for i in range(1, K + 1):
        c[i] = a[i] * c[0]
        if i > 1:
            c[i] -= np.dot(a_rev[K - i + 1 : K], c[1:i])
    return c


def _tails(c: np.ndarray) -> np.ndarray:
    # Kahan-compensated running sum; the tail is a difference of nearly equal numbers
    K = len(c) - 1
    tail = np.empty(K + 1)
    tail[0] = c[0]
    s = comp = 0.0
    for k in range(1, K + 1):
        tail[k] = (c[0] - s) + comp
        y = c[k] - comp
        t = s + y
        comp = (t - s) - y
        s = t
    return tail


def compute_weights(alpha: float, K: int) -> CaputoWeights:
    """Weights ``c_0..c_K`` and tails ``c_k^k`` for ``0 < alpha < 1``.

    The O(K^2) recursion runs once per ``alpha``; later calls with a smaller
    horizon slice the cached arrays.
    """
    if not 0.0 < alpha < 1.0:
        raise ConfigurationError(f"alpha must lie in the open interval (0, 1), got {alpha}", key="alpha")
    if int(K) != K or K < 1:
        raise ConfigurationError(f"horizon must be a positive integer, got {K}", key="K")
    K = int(K)
    cached = _CACHE.get(alpha)
    if cached is not None and cached.horizon >= K:
        return cached.truncated(K)

    c = _recursion(alpha, K)
    tail = _tails(c)
    if not np.all(c > 0):
        bad = int(np.argmax(~(c > 0)))
        raise WeightIntegrityError(f"c_{bad} = {c[bad]:.3e} is not positive (alpha={alpha})")
    if not np.all(tail[1:] > 0):
        bad = 1 + int(np.argmax(~(tail[1:] > 0)))
        raise WeightIntegrityError(f"tail c_{bad}^{bad} = {tail[bad]:.3e} is not positive (alpha={alpha})")
    for arr in (c, tail):
        arr.setflags(write=False)
    w = CaputoWeights(float(alpha), K, c, tail)
    _CACHE[alpha] = w
    return w


def _stack(history, k: int):
    if len(history) < k + 1:
        raise HorizonError(f"history has {len(history)} entries, step {k} needs {k + 1}")
    first = history[0]
    if isinstance(first, Field):
        basis = first.basis
        arr = np.stack([np.asarray(h.values) for h in history[: k + 1]])
        return arr, lambda v: Field(basis, values=v)
    arr = np.asarray(history[: k + 1], dtype=float)
    if arr.ndim == 1:
        return arr, float
    return arr, lambda v: v


def history_combination(weights: CaputoWeights, states: np.ndarray, k: int) -> np.ndarray:
    """``c_k^k U_0 + sum_{i=1}^{k-1} c_i U_{k-i}`` for an array of states."""
    weights.check(k)
    out = weights.tail[k] * states[0]
    if k > 1:
        # sum_{j=1}^{k-1} c_{k-j} U_j keeps the state slice contiguous
        out = out + weights.c[k - 1 : 0 : -1] @ states[1:k]
    return out


def discrete_caputo(history, weights: CaputoWeights, tau: float, k: int):
    """Discrete Caputo derivative at step ``k`` from ``history[0..k]``.

    ``history`` may hold scalars, arrays of nodal values, or :class:`Field`
    objects; the result has the same kind.
    """
    weights.check(k)
    arr, wrap = _stack(history, k)
    if k == 0:
        return wrap(np.zeros_like(arr[0]))
    uk = arr[k]
    acc = weights.tail[k] * (uk - arr[0])
    if k > 1:
        acc = acc + weights.c[1:k] @ (uk - arr[k - 1 : 0 : -1])
    return wrap(acc / tau**weights.alpha)


def discrete_caputo_alt(history, weights: CaputoWeights, tau: float, k: int):
    """Same derivative written against ``c_0``: ``c_0 (X_k - X_0) - sum c_i (X_{k-i} - X_0)``."""
    weights.check(k)
    arr, wrap = _stack(history, k)
    if k == 0:
        return wrap(np.zeros_like(arr[0]))
    x0 = arr[0]
    acc = weights.c0 * (arr[k] - x0)
    if k > 1:
        acc = acc - weights.c[1:k] @ (arr[k - 1 : 0 : -1] - x0)
    return wrap(acc / tau**weights.alpha)


def kernel_k(t, alpha: float):
    """Caputo kernel ``t^-alpha / Gamma(1-alpha)``."""
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise DomainError("kernel_k requires t > 0")
    out = t ** (-alpha) / math.gamma(1.0 - alpha)
    return float(out) if out.ndim == 0 else out


def kernel_ell(t, alpha: float):
    """Riemann-Liouville kernel ``t^(alpha-1) / Gamma(alpha)``, the convolution inverse of ``kernel_k``."""
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise DomainError("kernel_ell requires t > 0")
    out = t ** (alpha - 1.0) / math.gamma(alpha)
    return float(out) if out.ndim == 0 else out


def kernel_convolution(t: float, alpha: float) -> float:
    """``(k * ell)(t)`` by Gauss-Jacobi type quadrature; equals 1 for every ``t > 0``."""
    if t <= 0:
        raise DomainError("kernel_convolution requires t > 0")
    # integrand s^(alpha-1) (t-s)^(-alpha) handled by the algebraic weight
    val, _ = integrate.quad(lambda s: 1.0, 0.0, t, weight="alg", wvar=(alpha - 1.0, -alpha))
    return val / (math.gamma(alpha) * math.gamma(1.0 - alpha))
