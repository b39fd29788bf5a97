"""Time-fractional porous medium and fast diffusion equations on an interval.

Solves ``D^alpha_t u + (-Delta)^s (|u|^(m-1) u) = 0`` with zero Dirichlet data
by an implicit deconvolution scheme in time and a sine basis in space, and
checks the qualitative properties of the discrete solutions.
"""

from .caputo_kernel import CaputoWeights, compute_weights, discrete_caputo
from .errors import (
    ConfigurationError,
    DimensionError,
    DomainError,
    HorizonError,
    SolverError,
    TfpmeError,
    UnsupportedParameterError,
    WeightIntegrityError,
)
from .fode import kilbas_saigo, mittag_leffler, solve_scalar_fode
from .separable import solve_elliptic_profile
from .spectral_domain import Field, SpectralBasis, build_interval_basis
from .stepper import SolverConfig, Trajectory, evolve, step

__version__ = "0.1.0"

__all__ = [
    "CaputoWeights",
    "ConfigurationError",
    "DimensionError",
    "DomainError",
    "Field",
    "HorizonError",
    "SolverConfig",
    "SolverError",
    "SpectralBasis",
    "TfpmeError",
    "Trajectory",
    "UnsupportedParameterError",
    "WeightIntegrityError",
    "build_interval_basis",
    "compute_weights",
    "discrete_caputo",
    "evolve",
    "kilbas_saigo",
    "mittag_leffler",
    "solve_elliptic_profile",
    "solve_scalar_fode",
    "step",
]
