"""Operator-calculus solver for a fourth-order dispersal problem in a plane sector.

Modules
-------
grid          grids, state vectors, stencils, norms and discrete operators
roots         transcendental determinants, tau and the angular eigenvalues
angular       closed-form resolvent of the angular operator and its FD oracle
temporal      closed-form resolvent of the temporal operator
dpg           contour-integral inverse of the operator sum and its direct oracle
perturbation  fixed-point solve of the perturbed problem and reconstruction of u
bip           Fourier multiplier of the imaginary powers
acceptance    the acceptance criteria shared by the CLI and the tests
"""
from __future__ import annotations

from ._accel import active_backend
from .grid import AngularGrid, ProblemParams, SpaceTimeField, StateVector, TemporalGrid

__version__ = "0.1.0"

__all__ = ["AngularGrid", "ProblemParams", "SpaceTimeField", "StateVector", "TemporalGrid",
           "active_backend", "__version__"]
