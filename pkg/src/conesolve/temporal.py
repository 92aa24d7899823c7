"""Resolvent of the temporal operator ``L1 = (d_t - nu)^2`` on the half line.

For ``lambda`` in ``Sigma_nu = {Re sqrt(lambda) > nu}`` put ``s = sqrt(lambda)``,
``a = s - nu`` and ``b = s + nu`` (both with positive real part).  The unique
solution of ``V'' - 2 nu V' + (nu^2 - lambda) V = R`` with ``V(0) = 0`` and
decay at infinity is

    V(t) = ( e^{-a t} C - int_0^t e^{-a (t - u)} R(u) du
             - int_t^inf e^{-b (u - t)} R(u) du ) / (2 s),
    C    = int_0^inf e^{-b u} R(u) du,

which vanishes at ``t = 0`` by construction.  The integrals are truncated at
``T`` and evaluated with the product trapezoid rule, componentwise in theta.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from . import _accel
from .grid import SpaceTimeField, TemporalGrid, L1_dirichlet_matrix, lp_norm


class TemporalResolventError(ValueError):
    """Spectral parameter too close to the boundary of ``Sigma_nu`` or poor decay."""


@dataclass(frozen=True)
class SpectralRegion:
    """``Sigma_nu`` or its sub-sector ``Sigma_L1`` of angle parameter ``eps``."""

    nu: float
    kind: str = "Sigma_nu"
    eps: float = 0.1

    def __post_init__(self) -> None:
        if self.kind not in ("Sigma_nu", "Sigma_L1"):
            raise ValueError(f"unknown region kind {self.kind!r}")
        if self.kind == "Sigma_L1" and not (0.0 < self.eps < math.pi / 2):
            raise ValueError("eps must lie in (0, pi/2)")

    @property
    def radius(self) -> float:
        """Excluded radius ``4 nu^2 / sin^2(eps)`` of ``Sigma_L1``."""
        return 4.0 * self.nu**2 / math.sin(self.eps) ** 2

    @property
    def constant(self) -> float:
        """``M_L1 = 4 / sin(eps)``."""
        return 4.0 / math.sin(self.eps)


def in_sigma_nu(z: complex, nu: float) -> bool:
    """``Re sqrt(z) > nu`` written as ``sqrt(x^2 + y^2) > 2 nu^2 - x``.

    Squaring is avoided where the right side is negative, so no square root of
    a negative number is ever taken.
    """
    z = complex(z)
    x, y = z.real, z.imag
    rhs = 2.0 * nu * nu - x
    if rhs < 0.0:
        return True
    return math.hypot(x, y) > rhs


def in_region(z: complex, region: SpectralRegion) -> bool:
    """Membership of ``z`` in ``Sigma_nu`` or ``Sigma_L1``."""
    if not in_sigma_nu(z, region.nu):
        return False
    if region.kind == "Sigma_nu":
        return True
    z = complex(z)
    if z == 0:
        return False
    return abs(np.angle(z)) <= math.pi - 2.0 * region.eps and abs(z) >= region.radius


def margin(z: complex, nu: float) -> float:
    """``Re sqrt(z) - nu``."""
    return float(np.sqrt(complex(z)).real - nu)


def _time_last(values: np.ndarray) -> np.ndarray:
    return np.moveaxis(values, 0, -1)


def resolve_L1_array(lam: complex, R: np.ndarray, tgrid: TemporalGrid, nu: float, *,
                     margin_min: float = 1e-3, decay_tol: float | None = None) -> np.ndarray:
    """``(L1 - lambda)^{-1}`` applied to ``R`` whose first axis is time.

    Parameters
    ----------
    lam : complex
        Spectral parameter in ``Sigma_nu`` with ``Re sqrt(lambda) - nu >= margin_min``.
    R : ndarray
        Samples with time on axis 0 and arbitrary trailing shape.
    decay_tol : float, optional
        When given, ``max|R(T)| / max|R|`` must not exceed it.
    """
    lam = complex(lam)
    s = complex(np.sqrt(lam))
    if s.real - nu < margin_min:
        raise TemporalResolventError(
            f"lambda = {lam} too close to the boundary of Sigma_nu (margin {s.real - nu:.3e})")
    R = np.asarray(R, dtype=np.complex128)
    if decay_tol is not None:
        scale = float(np.max(np.abs(R)))
        if scale > 0 and float(np.max(np.abs(R[-1]))) / scale > decay_tol:
            raise TemporalResolventError("insufficient decay of the right-hand side at T")
    a = s - nu
    b = s + nu
    h = tgrid.h
    t = tgrid.nodes
    Rt = _time_last(R)
    left = _accel.conv_left(a, Rt, h)
    right = _accel.conv_right(b, Rt, h)
    C = right[..., :1]  # int_0^T e^{-b u} R(u) du
    V = (np.exp(-a * t) * C - left - right) / (2.0 * s)
    return np.moveaxis(V, -1, 0)


def resolve_L1(lam: complex, R: SpaceTimeField, nu: float, *, margin_min: float = 1e-3,
               decay_tol: float | None = None) -> SpaceTimeField:
    """Field version of :func:`resolve_L1_array`."""
    V = resolve_L1_array(lam, R.values, R.tgrid, nu, margin_min=margin_min, decay_tol=decay_tol)
    return R.like(V)


def exponential_example(lam: complex, nu: float, t: np.ndarray) -> np.ndarray:
    """Exact ``(L1 - lambda)^{-1}`` of ``e^{-t}``: ``c (e^{-t} - e^{(nu - sqrt(lambda)) t})``.

    ``c = 1 / ((1 + nu)^2 - lambda)``; the resonant value ``lambda = (1 + nu)^2``
    is rejected.
    """
    lam = complex(lam)
    den = (1.0 + nu) ** 2 - lam
    if abs(den) < 1e-12:
        raise ValueError("resonant spectral parameter (1 + nu)^2")
    out = (np.exp(-t) - np.exp((nu - np.sqrt(lam)) * t)) / den
    return out.real if lam.imag == 0 else out


def discrete_L1_resolve(lam: complex, R: np.ndarray, tgrid: TemporalGrid, nu: float) -> np.ndarray:
    """``(L1_h - lambda)^{-1}`` of the Dirichlet difference matrix (time on axis 0).

    ``R`` holds interior temporal nodes only (``N_t - 2`` rows).
    """
    k = tgrid.n - 2
    R = np.asarray(R, dtype=np.complex128)
    if R.shape[0] != k:
        raise ValueError(f"expected {k} interior time rows, got {R.shape[0]}")
    h = tgrid.h
    ab = np.zeros((3, k), dtype=np.complex128)
    ab[0, 1:] = 1.0 / h**2 - nu / h
    ab[1, :] = -2.0 / h**2 + nu * nu - complex(lam)
    ab[2, :-1] = 1.0 / h**2 + nu / h
    flat = R.reshape(k, -1)
    out = sla.solve_banded((1, 1), ab, flat, check_finite=False)
    return out.reshape(R.shape)


def L1_discrete_spectrum(tgrid: TemporalGrid, nu: float) -> np.ndarray:
    """Eigenvalues of the Dirichlet matrix of ``L1`` (closed form, tridiagonal Toeplitz)."""
    k = tgrid.n - 2
    h = tgrid.h
    lower = 1.0 / h**2 + nu / h
    upper = 1.0 / h**2 - nu / h
    diag = -2.0 / h**2 + nu * nu
    j = np.arange(1, k + 1)
    return diag + 2.0 * np.sqrt(complex(lower * upper)) * np.cos(j * np.pi / (k + 1))


@dataclass
class L1BoundReport:
    samples: list
    ratios: list
    bounds: list
    sharp_bounds: list
    passed: bool

    def as_dict(self) -> dict:
        return {
            "samples": [[float(np.real(z)), float(np.imag(z))] for z in self.samples],
            "ratios": [float(r) for r in self.ratios],
            "bounds": [float(b) for b in self.bounds],
            "sharp_bounds": [float(b) for b in self.sharp_bounds],
            "min_slack": float(min(b - r for r, b in zip(self.ratios, self.bounds))),
            "passed": self.passed,
        }


def verify_L1_bound(samples, corpus: list[np.ndarray], tgrid: TemporalGrid, nu: float, eps: float,
                    p: float = 2.0) -> L1BoundReport:
    """Check ``||(L1 - lambda)^{-1} R|| <= (4/sin eps) / |lambda| ||R||`` on ``Sigma_L1``.

    ``corpus`` entries are arrays with time on axis 0 (scalar per node is
    enough since the operator acts componentwise).  The sharper estimate
    ``2 ||R|| / ((Re sqrt(lambda) - nu) sqrt|lambda|)`` is reported alongside.
    """
    region = SpectralRegion(nu, "Sigma_L1", eps)
    ratios, bounds, pbounds = [], [], []
    ok = True
    for z in samples:
        if not in_region(z, region):
            raise ValueError(f"sample {z} lies outside Sigma_L1(eps={eps})")
        worst = 0.0
        for R in corpus:
            V = resolve_L1_array(z, R, tgrid, nu)
            nr = float(lp_norm(np.abs(R).reshape(R.shape[0], -1).max(axis=1), tgrid.h, p))
            nv = float(lp_norm(np.abs(V).reshape(V.shape[0], -1).max(axis=1), tgrid.h, p))
            worst = max(worst, nv / nr)
        bound = region.constant / abs(z)
        pbound = 2.0 / (margin(z, nu) * math.sqrt(abs(z)))
        ratios.append(worst)
        bounds.append(bound)
        pbounds.append(pbound)
        ok &= worst <= bound
    return L1BoundReport(list(samples), ratios, bounds, pbounds, bool(ok))


def sigma_L1_samples(nu: float, eps: float, n: int = 50, seed: int = 0,
                     moduli: tuple[float, float] = (1.0, 100.0)) -> list[complex]:
    """Random samples of ``Sigma_L1``: ``|lambda| = r * radius``, ``|arg| <= pi - 2 eps``."""
    region = SpectralRegion(nu, "Sigma_L1", eps)
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < n:
        r = region.radius * math.exp(rng.uniform(math.log(moduli[0]), math.log(moduli[1])))
        phi = rng.uniform(-(math.pi - 2 * eps), math.pi - 2 * eps)
        z = r * complex(math.cos(phi), math.sin(phi))
        if in_region(z, region):
            out.append(z)
    return out


__all__ = [
    "SpectralRegion", "TemporalResolventError", "in_region", "in_sigma_nu", "margin",
    "resolve_L1", "resolve_L1_array", "exponential_example", "discrete_L1_resolve",
    "L1_discrete_spectrum", "verify_L1_bound", "sigma_L1_samples", "L1_dirichlet_matrix",
]
