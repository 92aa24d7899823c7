from __future__ import annotations

import math

import numpy as np
import pytest

from conesolve import acceptance
from conesolve.grid import AngularGrid, ProblemParams, TemporalGrid


@pytest.fixture(scope="session")
def desk():
    """Desk-scale grids, contour and cached contour inverse (N_theta = 32, N_t = 64)."""
    return acceptance.desk_setup()


@pytest.fixture
def agrid():
    return AngularGrid(math.pi / 2, 65)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
