import numpy as np
import pytest

from heatlab.analytic import solve_delta
from heatlab.geometry import ArcRegion, OscillatoryDomainSpec, PhaseDomain, RegionSet
from heatlab.log import configure
from heatlab.solver import GridSpec


configure("WARNING")

QUADRANT = RegionSet.of((np.pi / 4, np.pi / 4))


@pytest.fixture
def quadrant():
    """The cone x1 > 0, x2 > 0"""
    return PhaseDomain.cone(QUADRANT)


@pytest.fixture
def shell_spec():
    """A = arc(0, π/8), B = arc(0, π/2), R = 4, ε = 0.3 (δ ≈ 0.593), three shells"""
    return OscillatoryDomainSpec(
        ArcRegion(0.0, np.pi / 8),
        ArcRegion(0.0, np.pi / 2),
        solve_delta(2, 0.3, 4.0),
        4.0,
        n_max=3,
    )


@pytest.fixture
def small_grid():
    return GridSpec(2.0, 0.1)
