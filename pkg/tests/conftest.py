import math

import pytest

from tfpme.spectral_domain import build_interval_basis


@pytest.fixture(scope="session")
def pi_basis():
    return build_interval_basis(math.pi, 32)


@pytest.fixture(scope="session")
def grid_basis():
    """Complete basis with the grid-consistent spectrum (order preserving steps)."""
    return build_interval_basis(math.pi, 40, spectrum="discrete")
