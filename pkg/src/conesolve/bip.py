"""Fourier multiplier of the imaginary powers and its Mikhlin constants.

With ``lambda_1 = 2 + 4 pi xi + 4 pi^2 xi^2`` and ``lambda_2 = 2 - 4 pi xi + 4 pi^2 xi^2``
(both positive for real ``xi``) the multiplier is

    m(xi) = (lambda_2^{ir} - lambda_1^{ir}) / (8 pi xi),   m(0) = -2^{ir-1} i r.

Powers are ``exp(i r ln lambda)`` with real positive ``lambda``, so no branch
choice arises.  The difference in the numerator is evaluated as
``-2i exp(i r c) sin(r d / 2)`` with ``c`` the mean and ``d = ln(lambda_1/lambda_2)``
the difference of the logarithms, which avoids cancellation as ``xi -> 0``.

Two versions of ``xi m'(xi)`` are provided.  :func:`xi_times_mprime` is the
closed form with prefactors ``1/32`` and ``1/(32 pi xi)`` whose limit at
``xi = 0`` is ``3 * 2^{ir-5} i r``.  :func:`xi_times_mprime_exact` is the
derivative of :func:`multiplier` itself, which vanishes at ``xi = 0``
because ``m`` is even and smooth.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special


def lambdas(xi):
    xi = np.asarray(xi, dtype=float)
    a = 4.0 * math.pi * xi
    b = 4.0 * math.pi**2 * xi * xi
    return 2.0 + a + b, 2.0 - a + b


def _log_parts(xi):
    l1, l2 = lambdas(xi)
    d = np.log1p(8.0 * math.pi * np.asarray(xi, dtype=float) / l2)  # ln(l1 / l2)
    c = 0.5 * (np.log(l1) + np.log(l2))
    return l1, l2, c, d


def _numerator(xi, r: float):
    """``lambda_2^{ir} - lambda_1^{ir}``."""
    _, _, c, d = _log_parts(xi)
    return -2j * np.exp(1j * r * c) * np.sin(0.5 * r * d)


def multiplier(xi, r: float):
    """``m(xi, r)``; the limit ``-2^{ir-1} i r`` is returned at ``xi = 0``.

    >>> float(abs(multiplier(0.0, 1.0)))
    0.5
    """
    xi_arr = np.asarray(xi, dtype=float)
    out = np.empty(xi_arr.shape, dtype=np.complex128)
    zero = xi_arr == 0.0
    nz = ~zero
    out[nz] = _numerator(xi_arr[nz], r) / (8.0 * math.pi * xi_arr[nz])
    out[zero] = -(2.0 ** complex(-1.0, r)) * 1j * r
    return out[()] if out.ndim == 0 else out


def xi_times_mprime(xi, r: float):
    """Closed form with prefactors ``1/32``; limit ``3 * 2^{ir-5} i r`` at ``xi = 0``."""
    xi_arr = np.asarray(xi, dtype=float)
    out = np.empty(xi_arr.shape, dtype=np.complex128)
    zero = xi_arr == 0.0
    nz = ~zero
    x = xi_arr[nz]
    l1, l2 = lambdas(x)
    p2 = np.exp(complex(-1.0, r) * np.log(l2))
    p1 = np.exp(complex(-1.0, r) * np.log(l1))
    t1 = (1j * r / 32.0) * (p2 * (-1.0 + 2.0 * math.pi * x) - p1 * (1.0 + 2.0 * math.pi * x))
    out[nz] = t1 - _numerator(x, r) / (32.0 * math.pi * x)
    out[zero] = 3.0 * 2.0 ** complex(-5.0, r) * 1j * r
    return out[()] if out.ndim == 0 else out


def xi_times_mprime_exact(xi, r: float):
    """``xi * d/dxi m(xi, r)``, equal to 0 at ``xi = 0``.

    Below ``|xi| = 1e-4`` the two terms cancel to order ``xi^2``.  There a
    centered difference of :func:`multiplier` with step ``1e-4 |xi|`` replaces
    the closed form, whose rounding error grows like ``1e-16 / |xi|``.
    """
    xi_arr = np.asarray(xi, dtype=float)
    out = np.zeros(xi_arr.shape, dtype=np.complex128)
    big = np.abs(xi_arr) >= 1e-4
    x = xi_arr[big]
    l1, l2 = lambdas(x)
    p2 = np.exp(complex(-1.0, r) * np.log(l2))
    p1 = np.exp(complex(-1.0, r) * np.log(l1))
    t1 = (1j * r / 2.0) * (p2 * (-1.0 + 2.0 * math.pi * x) - p1 * (1.0 + 2.0 * math.pi * x))
    out[big] = t1 - _numerator(x, r) / (8.0 * math.pi * x)
    small = (~big) & (xi_arr != 0.0)
    if np.any(small):
        x = xi_arr[small]
        h = 1e-4 * np.abs(x)
        out[small] = x * (multiplier(x + h, r) - multiplier(x - h, r)) / (2.0 * h)
    return out[()] if out.ndim == 0 else out


def fd_xi_mprime(xi: float, r: float, h: float = 1e-4) -> complex:
    """Centered-difference oracle ``xi (m(xi + h) - m(xi - h)) / (2h)``."""
    return complex(xi * (multiplier(xi + h, r) - multiplier(xi - h, r)) / (2.0 * h))


def xi_grid(lo: float = 1e-8, hi: float = 1e4, per_decade: int = 2000) -> np.ndarray:
    """Symmetric log-spaced grid ``+-[lo, hi]``."""
    n = int(round(math.log10(hi / lo) * per_decade)) + 1
    pos = np.logspace(math.log10(lo), math.log10(hi), n)
    return np.concatenate([-pos[::-1], pos])


@dataclass
class SupBounds:
    r: float
    sup_m: float
    sup_xm: float
    argmax_m: float
    argmax_xm: float
    limit_m: float
    limit_xm: float
    form: str

    @property
    def mikhlin_sum(self) -> float:
        return self.sup_m + self.sup_xm

    def as_dict(self) -> dict:
        d = dict(self.__dict__)
        d["mikhlin_sum"] = self.mikhlin_sum
        return {k: (float(v) if isinstance(v, (float, np.floating)) else v) for k, v in d.items()}


def sup_bounds(r: float, grid: np.ndarray | None = None, form: str = "closed") -> SupBounds:
    """Grid suprema of ``|m|`` and ``|xi m'|``.

    ``form`` selects :func:`xi_times_mprime` (``"closed"``) or
    :func:`xi_times_mprime_exact` (``"exact"``).  ``limit_*`` are the values at the
    grid point of smallest modulus.
    """
    if form not in ("closed", "exact"):
        raise ValueError(f"unknown form {form!r}")
    xi = xi_grid() if grid is None else np.asarray(grid, dtype=float)
    fm = np.abs(multiplier(xi, r))
    g = xi_times_mprime if form == "closed" else xi_times_mprime_exact
    fx = np.abs(g(xi, r))
    i0 = int(np.argmin(np.abs(xi)))
    im, ix = int(np.argmax(fm)), int(np.argmax(fx))
    return SupBounds(float(r), float(fm[im]), float(fx[ix]), float(xi[im]), float(xi[ix]),
                     float(fm[i0]), float(fx[i0]), form)


def lipschitz_bound(xi, r: float):
    """``|r| |ln lambda_2 - ln lambda_1| / (8 pi |xi|)``, an upper bound for ``|m|``."""
    _, _, _, d = _log_parts(xi)
    return abs(r) * np.abs(d) / (8.0 * math.pi * np.abs(np.asarray(xi, dtype=float)))


# ---------------------------------------------------------------------------
# Gamma reflection
# ---------------------------------------------------------------------------
class PoleError(ValueError):
    """Sample too close to a pole of ``1 / sin(pi z)``."""


def mellin_integral(z: complex, *, tail: float = 40.0) -> complex:
    """``int_0^inf sigma^{-z} / (sigma + 1) dsigma`` for ``0 < Re z < 1``.

    With ``sigma = e^x`` the integrand becomes ``g(x) e^{-i Im(z) x}`` where
    ``g(x) = e^{(1 - Re z) x} / (e^x + 1)`` decays exponentially both ways.  The
    oscillatory factor is handled by QUADPACK's weighted (cos/sin) rule on a
    finite window where ``g`` has fallen below ``e^{-tail}``.
    """
    z = complex(z)
    eps, r = z.real, -z.imag
    if not (0.0 < eps < 1.0):
        raise ValueError("the integral converges only for 0 < Re z < 1")
    L = tail / min(eps, 1.0 - eps)

    def g(x):
        # e^{(1-eps) x} / (e^x + 1), written to avoid overflow
        return math.exp(-eps * x) / (1.0 + math.exp(-x)) if x > 0 else math.exp((1.0 - eps) * x) / (math.exp(x) + 1.0)

    if r == 0.0:
        val, _ = integrate.quad(g, -L, L, limit=400, epsabs=1e-13, epsrel=1e-12)
        return complex(val)
    kw = dict(wvar=r, limit=400, epsabs=1e-13, epsrel=1e-12)
    re, _ = integrate.quad(g, -L, L, weight="cos", **kw)
    im, _ = integrate.quad(g, -L, L, weight="sin", **kw)
    return complex(re, im)


def reflection(z: complex) -> complex:
    """``Gamma(z) Gamma(1 - z) = pi / sin(pi z)``."""
    return math.pi / cmath.sin(math.pi * complex(z))


@dataclass
class GammaSample:
    z: complex
    integral: complex
    reference: complex
    error: float
    flip_error: float

    def as_dict(self) -> dict:
        return {"z": [self.z.real, self.z.imag], "integral": [self.integral.real, self.integral.imag],
                "reference": [self.reference.real, self.reference.imag],
                "error": self.error, "flip_error": self.flip_error}


def gamma_reflection_check(z_samples, *, pole_tol: float = 1e-3) -> list[GammaSample]:
    """Quadrature of the Mellin integral against ``pi / sin(pi z)``.

    The shift ``Gamma(z - 1) Gamma(2 - z) = -Gamma(z) Gamma(1 - z)`` is checked
    with complex ``scipy.special.gamma`` as an independent evaluation.
    """
    out = []
    for z in z_samples:
        z = complex(z)
        if abs(z.real - round(z.real)) < pole_tol and abs(z.imag) < pole_tol:
            raise PoleError(f"z = {z} is within {pole_tol} of a pole")
        val = mellin_integral(z)
        ref = reflection(z)
        g0 = special.gamma(z) * special.gamma(1.0 - z)
        g1 = special.gamma(z - 1.0) * special.gamma(2.0 - z)
        flip = abs(g1 + g0) / max(abs(g0), 1e-300)
        out.append(GammaSample(z, val, ref, abs(val - ref) / max(abs(ref), 1e-300), float(flip)))
    return out


__all__ = [
    "GammaSample", "PoleError", "SupBounds", "fd_xi_mprime", "gamma_reflection_check", "lambdas",
    "lipschitz_bound", "mellin_integral", "multiplier", "reflection", "sup_bounds", "xi_grid",
    "xi_times_mprime", "xi_times_mprime_exact",
]
