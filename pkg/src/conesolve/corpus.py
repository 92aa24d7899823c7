"""Seeded corpora of smooth test data.

Every generator draws from ``numpy.random.default_rng(seed)``, so a seed fully
determines the data.  Angular profiles are multiplied by
``sin(pi theta / omega)^2``, which makes both the value and the slope vanish
at the two edges (clamped).
"""
from __future__ import annotations

import math

import numpy as np

from .grid import AngularGrid, SpaceTimeField, StateVector, TemporalGrid


def _clamped_profile(rng: np.random.Generator, x: np.ndarray, modes: int) -> np.ndarray:
    """Random trigonometric profile on ``x in [0, 1]`` times the clamping bump."""
    a = rng.normal(size=modes) / (1.0 + np.arange(modes))
    phase = rng.uniform(0.0, 2.0 * math.pi, size=modes)
    prof = sum(a[j] * np.cos((j + 1) * math.pi * x + phase[j]) for j in range(modes))
    prof = prof + rng.normal()
    return np.sin(math.pi * x) ** 2 * prof


def angular_corpus(grid: AngularGrid, m: int = 20, seed: int = 0, modes: int = 4) -> np.ndarray:
    """``(m, 2, N_theta)`` real array; both components are smooth and clamped."""
    rng = np.random.default_rng(seed)
    x = grid.nodes / grid.omega
    out = np.empty((m, 2, grid.n))
    for i in range(m):
        out[i, 0] = _clamped_profile(rng, x, modes)
        out[i, 1] = _clamped_profile(rng, x, modes)
    return out


def angular_state(grid: AngularGrid, seed: int = 0, modes: int = 4) -> StateVector:
    """One member of :func:`angular_corpus` as a state vector."""
    c = angular_corpus(grid, 1, seed, modes)[0]
    return StateVector(c[0], c[1], grid)


def temporal_profiles(tgrid: TemporalGrid, m: int = 10, seed: int = 0) -> list[np.ndarray]:
    """Decaying profiles ``t^j e^{-a t} cos(b t + c)`` sampled on ``tgrid``."""
    rng = np.random.default_rng(seed)
    t = tgrid.nodes
    out = []
    for _ in range(m):
        j = int(rng.integers(0, 3))
        a = rng.uniform(0.5, 2.0)
        b = rng.uniform(0.0, 3.0)
        c = rng.uniform(0.0, 2.0 * math.pi)
        out.append(t**j * np.exp(-a * t) * np.cos(b * t + c))
    return out


def field_corpus(tgrid: TemporalGrid, agrid: AngularGrid, m: int = 10, seed: int = 0,
                 vanish_at_ends: bool = False) -> list[SpaceTimeField]:
    """Separable sums ``sum_l g_l(t) phi_l(theta)`` in each component.

    ``vanish_at_ends`` multiplies by ``t (T - t) / T^2`` (used for manufactured
    solutions, which must satisfy ``V(0) = 0`` and vanish at the truncation).
    """
    rng = np.random.default_rng(seed)
    x = agrid.nodes / agrid.omega
    t = tgrid.nodes
    fields = []
    for _ in range(m):
        vals = np.zeros((tgrid.n, 2, agrid.n))
        for comp in range(2):
            for _term in range(2):
                g = temporal_profiles(tgrid, 1, int(rng.integers(0, 2**31)))[0]
                phi = _clamped_profile(rng, x, 4)
                vals[:, comp] += g[:, None] * phi[None, :]
        if vanish_at_ends:
            vals *= (t * (tgrid.T - t) / tgrid.T**2)[:, None, None]
        fields.append(SpaceTimeField(vals, tgrid, agrid, {"seed": seed}))
    return fields


__all__ = ["angular_corpus", "angular_state", "field_corpus", "temporal_profiles"]
