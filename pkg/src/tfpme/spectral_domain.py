"""Dirichlet operators on an interval, their eigenbasis, and the norms built on it.

The domain is the open interval ``(0, length)`` sampled on the uniform interior
grid ``x_j = j * length / (n_grid + 1)``.  The sine eigenfunctions

    Phi_k(x) = sqrt(2 / length) * sin(k pi x / length)

are exactly orthonormal under the composite trapezoid rule on that grid (the
boundary nodes carry zero weight), so analysis/synthesis is a discrete sine
transform and every operator below is diagonal in coefficient space.

Two spectra are available for the diffusion operator ``L = (-Delta)^s``:

``"exact"``
    ``lambda_k = (k pi / length)^(2 s)``, the eigenvalues of the continuous
    Dirichlet Laplacian raised to the spectral power ``s``.
``"discrete"``
    ``lambda_k = ((2 / h) sin(k pi h / (2 length)))^(2 s)``, the eigenvalues of
    the three-point Dirichlet Laplacian on the grid (same eigenvectors).  When
    every grid mode is kept the grid operator is an M-matrix, which makes the
    time-stepper order preserving to rounding error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import ConfigurationError, DimensionError, DomainError

__all__ = [
    "SpectralBasis",
    "Field",
    "NormRecord",
    "build_interval_basis",
    "apply_operator",
    "apply_inverse",
    "green_kernel_eval",
    "norms",
    "lp_norm",
]

SPECTRA = ("exact", "discrete")


@dataclass(frozen=True, eq=False)
class SpectralBasis:
    length: float
    n_modes: int
    n_grid: int
    s_power: float
    spectrum: str
    eigenvalues: np.ndarray
    grid: np.ndarray
    eigenfunctions: np.ndarray  # (n_modes, n_grid): Phi_k(x_j)

    @property
    def h(self) -> float:
        """Grid spacing, which is also the trapezoid weight of every node."""
        return self.length / (self.n_grid + 1)

    @property
    def complete(self) -> bool:
        return self.n_modes == self.n_grid

    @property
    def phi1(self) -> np.ndarray:
        return self.eigenfunctions[0]

    @cached_property
    def dist(self) -> np.ndarray:
        """Distance of each grid node to the boundary."""
        return np.minimum(self.grid, self.length - self.grid)

    def analyze(self, values: np.ndarray) -> np.ndarray:
        return self.h * (self.eigenfunctions @ values)

    def synthesize(self, coeffs: np.ndarray) -> np.ndarray:
        return self.eigenfunctions.T @ coeffs

    def integrate(self, values: np.ndarray) -> float | np.ndarray:
        return self.h * np.sum(values, axis=-1)

    @cached_property
    def operator_matrix(self) -> np.ndarray:
        """Nodal matrix of L (rank ``n_modes``)."""
        P = self.eigenfunctions
        return self.h * (P.T * self.eigenvalues) @ P

    @cached_property
    def inverse_matrix(self) -> np.ndarray:
        """Nodal matrix of L^-1 on the span of the basis."""
        P = self.eigenfunctions
        return self.h * (P.T / self.eigenvalues) @ P

    def field(self, values=None, coeffs=None) -> "Field":
        return Field(self, values=values, coeffs=coeffs)

    def eigenfunction(self, k: int) -> "Field":
        if not 1 <= k <= self.n_modes:
            raise DimensionError(f"mode {k} outside 1..{self.n_modes}")
        c = np.zeros(self.n_modes)
        c[k - 1] = 1.0
        return Field(self, coeffs=c)


def build_interval_basis(
    length: float,
    n_modes: int,
    n_grid: int | None = None,
    s_power: float = 1.0,
    spectrum: str = "exact",
) -> SpectralBasis:
    """Build the sine eigenbasis of ``(-Delta)^s_power`` on ``(0, length)``.

    ``n_grid`` defaults to ``n_modes`` (a complete discrete sine transform).
    """
    if n_grid is None:
        n_grid = n_modes
    if not (math.isfinite(length) and length > 0):
        raise ConfigurationError(f"length must be positive, got {length}", key="length")
    if int(n_modes) != n_modes or n_modes < 1:
        raise ConfigurationError(f"n_modes must be a positive integer, got {n_modes}", key="n_modes")
    if int(n_grid) != n_grid or n_grid < 1:
        raise ConfigurationError(f"n_grid must be a positive integer, got {n_grid}", key="n_grid")
    if n_grid < n_modes:
        raise ConfigurationError(f"n_grid={n_grid} must be >= n_modes={n_modes}", key="n_grid")
    if not 0.0 < s_power <= 1.0:
        raise ConfigurationError(f"s_power must lie in (0, 1], got {s_power}", key="s_power")
    if spectrum not in SPECTRA:
        raise ConfigurationError(f"spectrum must be one of {SPECTRA}, got {spectrum!r}", key="spectrum")

    n_modes, n_grid = int(n_modes), int(n_grid)
    h = length / (n_grid + 1)
    k = np.arange(1, n_modes + 1, dtype=float)
    grid = h * np.arange(1, n_grid + 1, dtype=float)
    if spectrum == "exact":
        symbol = (k * np.pi / length) ** 2
    else:
        symbol = (2.0 / h * np.sin(k * np.pi * h / (2.0 * length))) ** 2
    eigenvalues = symbol**s_power
    table = math.sqrt(2.0 / length) * np.sin(np.outer(k, grid) * (np.pi / length))
    for arr in (eigenvalues, grid, table):
        arr.setflags(write=False)
    return SpectralBasis(
        length=float(length),
        n_modes=n_modes,
        n_grid=n_grid,
        s_power=float(s_power),
        spectrum=spectrum,
        eigenvalues=eigenvalues,
        grid=grid,
        eigenfunctions=table,
    )


class Field:
    """A function on the grid held as nodal values and/or spectral coefficients.

    Whichever representation is missing is computed on first access and
    cached.  Fields are treated as immutable.
    """

    __slots__ = ("basis", "_values", "_coeffs")

    def __init__(self, basis: SpectralBasis, values=None, coeffs=None) -> None:
        if values is None and coeffs is None:
            raise ValueError("a Field needs values or coeffs")
        self.basis = basis
        self._values = None
        self._coeffs = None
        if values is not None:
            values = np.asarray(values, dtype=float)
            if values.shape != (basis.n_grid,):
                raise DimensionError(f"values have shape {values.shape}, basis grid has {basis.n_grid} points")
            self._values = values
        if coeffs is not None:
            coeffs = np.asarray(coeffs, dtype=float)
            if coeffs.shape != (basis.n_modes,):
                raise DimensionError(f"coeffs have shape {coeffs.shape}, basis has {basis.n_modes} modes")
            self._coeffs = coeffs

    @classmethod
    def from_function(cls, basis: SpectralBasis, func) -> "Field":
        return cls(basis, values=func(basis.grid))

    @property
    def has_values(self) -> bool:
        return self._values is not None

    @property
    def has_coeffs(self) -> bool:
        return self._coeffs is not None

    @property
    def values(self) -> np.ndarray:
        if self._values is None:
            self._values = self.basis.synthesize(self._coeffs)
        return self._values

    @property
    def coeffs(self) -> np.ndarray:
        if self._coeffs is None:
            self._coeffs = self.basis.analyze(self._values)
        return self._coeffs

    def analyzed(self) -> "Field":
        self.coeffs
        return self

    def synthesized(self) -> "Field":
        self.values
        return self

    def _combine(self, other, op) -> "Field":
        if isinstance(other, Field):
            _check_same_basis(self.basis, other.basis)
            if self.has_coeffs and other.has_coeffs and not (self.has_values and other.has_values):
                return Field(self.basis, coeffs=op(self.coeffs, other.coeffs))
            return Field(self.basis, values=op(self.values, other.values))
        return NotImplemented

    def __add__(self, other):
        return self._combine(other, np.add)

    def __sub__(self, other):
        return self._combine(other, np.subtract)

    def __neg__(self):
        return self * -1.0

    def __mul__(self, scalar):
        if isinstance(scalar, Field):
            return NotImplemented
        return Field(
            self.basis,
            values=None if self._values is None else self._values * scalar,
            coeffs=None if self._coeffs is None else self._coeffs * scalar,
        )

    __rmul__ = __mul__

    def __repr__(self) -> str:
        rep = "+".join(n for n, f in (("values", self.has_values), ("coeffs", self.has_coeffs)) if f)
        return f"Field(n_grid={self.basis.n_grid}, n_modes={self.basis.n_modes}, {rep})"


def _check_same_basis(a: SpectralBasis, b: SpectralBasis) -> None:
    if a is b:
        return
    if a.n_modes != b.n_modes or a.n_grid != b.n_grid or a.length != b.length:
        raise DimensionError("fields live on different bases")


def _as_field(basis: SpectralBasis, f: Field) -> Field:
    if not isinstance(f, Field):
        raise TypeError(f"expected Field, got {type(f).__name__}")
    if f.basis is not basis:
        _check_same_basis(basis, f.basis)
        if f.basis.n_modes != basis.n_modes:
            raise DimensionError("mode count mismatch")
    return f


def apply_operator(basis: SpectralBasis, f: Field) -> Field:
    """Return L f, i.e. coefficients ``lambda_k * f_k``."""
    f = _as_field(basis, f)
    return Field(basis, coeffs=basis.eigenvalues * f.coeffs)


def apply_inverse(basis: SpectralBasis, f: Field) -> Field:
    """Return L^-1 f, i.e. coefficients ``f_k / lambda_k``."""
    f = _as_field(basis, f)
    return Field(basis, coeffs=f.coeffs / basis.eigenvalues)


def green_kernel_eval(basis: SpectralBasis, x: float, y: float) -> float:
    """Green function of L at ``(x, y)``.

    Closed form ``min(x,y) (length - max(x,y)) / length`` when ``s_power == 1``
    (which also equals the three-point discrete Green function at grid nodes);
    truncated eigen-expansion otherwise.
    """
    L = basis.length
    if not (0.0 < x < L and 0.0 < y < L):
        raise DomainError(f"points ({x}, {y}) outside (0, {L})")
    if basis.s_power == 1.0:
        return min(x, y) * (L - max(x, y)) / L
    k = np.arange(1, basis.n_modes + 1)
    phx = math.sqrt(2.0 / L) * np.sin(k * np.pi * x / L)
    phy = math.sqrt(2.0 / L) * np.sin(k * np.pi * y / L)
    return float(np.sum(phx * phy / basis.eigenvalues))


def green_matrix(basis: SpectralBasis, x0: float) -> np.ndarray:
    """Green function ``G(x0, x_j)`` sampled on the grid."""
    return np.array([green_kernel_eval(basis, x0, xj) for xj in basis.grid])


@dataclass(frozen=True)
class NormRecord:
    l1: float
    l2: float
    linf: float
    l1_phi1: float
    h: float
    hstar: float
    energy: float
    lp: dict = field(default_factory=dict)


def lp_norm(basis: SpectralBasis, values: np.ndarray, p: float) -> float | np.ndarray:
    """Trapezoid L^p norm of nodal values; ``values`` may be a stack of states."""
    if p == math.inf:
        return np.max(np.abs(values), axis=-1)
    if p < 1:
        raise ConfigurationError(f"p must be >= 1, got {p}", key="p")
    return (basis.h * np.sum(np.abs(values) ** p, axis=-1)) ** (1.0 / p)


def norms(basis: SpectralBasis, f: Field, m: float = 1.0, p=()) -> NormRecord:
    """All norms of ``f`` used by the verification layer.

    ``m`` is the nonlinearity exponent entering the energy
    ``E(u) = 1/(1+m) int |u|^(1+m)``; ``p`` lists extra L^p exponents.
    """
    f = _as_field(basis, f)
    ps = (p,) if np.isscalar(p) else tuple(p)
    for q in ps:
        if q < 1:
            raise ConfigurationError(f"p must be >= 1, got {q}", key="p")
    u = f.values
    c = f.coeffs
    absu = np.abs(u)
    return NormRecord(
        l1=float(basis.h * absu.sum()),
        l2=float(lp_norm(basis, u, 2)),
        linf=float(absu.max()),
        l1_phi1=float(basis.h * np.dot(absu, basis.phi1)),
        h=float(np.sqrt(np.sum(basis.eigenvalues * c**2))),
        hstar=float(np.sqrt(np.sum(c**2 / basis.eigenvalues))),
        energy=float(basis.h * np.sum(absu ** (1.0 + m)) / (1.0 + m)),
        lp={q: float(lp_norm(basis, u, q)) for q in ps},
    )
