"""Resolvent of the angular operator ``A`` by explicit exponential kernels.

For ``lambda`` off ``[0, inf)`` write ``a = sqrt(-lambda)`` (principal root),
``alpha1 = a + i`` and ``alpha2 = a - i``.  The first component of
``(A - lambda)^{-1} F`` solves the clamped two-point problem

    psi'''' + 2 (lambda + 1) psi'' + (lambda - 1)^2 psi = G,
    G = -F2 - 2 (F1'' - F1) - lambda F1,

and the second component is ``psi2 = lambda psi1 + F1``.  The fourth-order
operator factors as ``(D^2 - alpha1^2)(D^2 - alpha2^2)``, and the solution is
assembled from two nested two-sided kernels ``K_alpha``: first ``I`` and
``v`` for the ``alpha1`` factor, then ``J`` and the particular solution ``S``
for the ``alpha2`` factor, and finally four boundary constants ``beta``
fixing the clamped traces.

Two corrections relative to the printed closed forms are built in and were
established against a dense finite-difference solve:

* the ``F1''`` term inside ``I`` carries ``-lambda/alpha1^2`` (not ``+``);
* ``beta3`` and ``beta4`` carry the opposite overall sign.

The ``U_-``/``U_+`` denominators are selectable: ``variant="sine"`` uses
``1 - e^{-2 omega a} -+ 2 a e^{-omega a} sin(omega)`` and ``variant="omega"``
uses ``1 - e^{-2 omega a} -+ 2 omega a e^{-omega a}``.  Only the former
reproduces the boundary-value problem.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _accel
from .grid import (AngularGrid, StateVector, d2, interior_blocks, lp_norm, x_norm,
                   A_matrix)

VARIANTS = ("sine", "omega")


class ResolventError(ValueError):
    """The spectral parameter is not admissible for the kernel formulas."""


class NearEigenvalueError(ResolventError):
    """``|U_-|`` or ``|U_+|`` fell below the spectral margin."""


class BranchCutError(ResolventError):
    """``lambda`` lies on ``[0, inf)`` where ``sqrt(-lambda)`` is discontinuous."""


# ---------------------------------------------------------------------------
# kernels
# ---------------------------------------------------------------------------
def kernel_convolution(alpha: complex, f: np.ndarray, grid: AngularGrid, *,
                       allow_growth: bool = False) -> np.ndarray:
    """Two-sided kernel ``K(x) = int_0^x e^{-(x-s) alpha} f + int_x^omega e^{-(s-x) alpha} f``.

    Parameters
    ----------
    alpha : complex
        Decay rate; ``Re alpha > 0`` is required unless ``allow_growth``.
    f : ndarray
        Samples on ``grid`` along the last axis (batched).
    grid : AngularGrid

    Returns
    -------
    ndarray
        ``K`` at every node, by product trapezoid quadrature.
    """
    if not allow_growth and complex(alpha).real <= 0.0:
        raise ResolventError(f"kernel needs Re(alpha) > 0, got alpha = {alpha}")
    return _accel.conv_sym(complex(alpha), f, grid.h)


def kernel_convolution_extrapolated(alpha: complex, fn, omega: float, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Richardson-extrapolated ``K_alpha[fn]`` on a grid of ``n`` nodes.

    ``fn`` is a callable sampled on the grid and on its bisection; the
    combination ``(4 K_{h/2} - K_h) / 3`` cancels the ``h^2`` term of the
    product trapezoid rule.  Returns ``(nodes, K)``.
    """
    g1 = AngularGrid(omega, n)
    g2 = AngularGrid(omega, 2 * n - 1)
    k1 = kernel_convolution(alpha, fn(g1.nodes), g1)
    k2 = kernel_convolution(alpha, fn(g2.nodes), g2)[..., ::2]
    return g1.nodes, (4.0 * k2 - k1) / 3.0


# ---------------------------------------------------------------------------
# resolvent
# ---------------------------------------------------------------------------
@dataclass
class ResolventIngredients:
    """Intermediate quantities of one resolvent evaluation (batched)."""

    lam: complex
    alpha1: complex
    alpha2: complex
    I: np.ndarray
    v: np.ndarray
    J: np.ndarray
    S: np.ndarray
    U_minus: complex
    U_plus: complex
    beta: np.ndarray  # shape (..., 4)
    variant: str


def sqrt_minus(lam: complex) -> complex:
    """Principal ``sqrt(-lambda)``."""
    return complex(np.sqrt(-complex(lam)))


def u_factors(lam: complex, omega: float, variant: str = "sine") -> tuple[complex, complex]:
    """``(U_-, U_+)`` for the selected variant."""
    if variant not in VARIANTS:
        raise ValueError(f"variant must be one of {VARIANTS}")
    a = sqrt_minus(lam)
    s = math.sin(omega) if variant == "sine" else omega
    e = np.exp(-omega * a)
    base = 1.0 - e * e
    return complex(base - 2.0 * s * a * e), complex(base + 2.0 * s * a * e)


def _check_lambda(lam: complex) -> None:
    lam = complex(lam)
    if lam == 0:
        raise ResolventError("lambda = 0: the kernel formulas degenerate, use solve_A_at_zero")
    if lam.real > 0 and abs(lam.imag) <= 1e-14 * (1.0 + abs(lam)):
        raise BranchCutError(
            f"lambda = {lam} lies on the positive real axis (branch cut of sqrt(-lambda)); "
            "handle this point with the temporal operator or move it off the axis")
    if abs(lam - 1.0) < 1e-12:
        raise ResolventError("lambda = 1 makes alpha2 vanish")


def resolve_A_arrays(lam: complex, F1: np.ndarray, F2: np.ndarray, grid: AngularGrid, *,
                     variant: str = "sine", spectral_margin: float = 1e-8,
                     return_ingredients: bool = False):
    """Batched ``(A - lambda)^{-1}``; ``F1``, ``F2`` have the grid on the last axis.

    Returns ``(psi1, psi2)`` or ``(psi1, psi2, ingredients)``.
    """
    _check_lambda(lam)
    lam = complex(lam)
    om = grid.omega
    th = grid.nodes
    F1 = np.asarray(F1, dtype=np.complex128)
    F2 = np.asarray(F2, dtype=np.complex128)
    a = sqrt_minus(lam)
    a1, a2 = a + 1j, a - 1j
    Um, Up = u_factors(lam, om, variant)
    if min(abs(Um), abs(Up)) < spectral_margin:
        raise NearEigenvalueError(
            f"near-eigenvalue lambda = {lam}: |U-| = {abs(Um):.2e}, |U+| = {abs(Up):.2e}")

    F1pp = d2(F1, grid)
    q = (1.0 - lam) ** 2  # alpha1^2 alpha2^2
    g = -F2 - 2.0 * (F1pp - F1) - (lam / a1**2) * F1pp
    I = kernel_convolution(a1, g, grid)
    e1 = np.exp(-om * a1)
    e2 = np.exp(-om * a2)
    W = 1.0 / (1.0 - e1 * e1)
    Z = 1.0 / (1.0 - e2 * e2)
    E1L, E1R = np.exp(-th * a1), np.exp(-(om - th) * a1)
    E2L, E2R = np.exp(-th * a2), np.exp(-(om - th) * a2)
    I0, Iw = I[..., :1], I[..., -1:]
    v = (E1L * W / (2 * a1) * (I0 - e1 * Iw) + (lam / q) * F1pp
         + E1R * W / (2 * a1) * (Iw - e1 * I0) - I / (2 * a1))
    J = kernel_convolution(a2, v, grid)
    J0, Jw = J[..., :1], J[..., -1:]
    S = (E2L * Z / (2 * a2) * (J0 - e2 * Jw) - (lam / q) * F1
         + E2R * Z / (2 * a2) * (Jw - e2 * J0) - J / (2 * a2))
    c4 = 1.0 / 4j
    b1 = c4 / Um * (1 - e1) / (1 - e2) * (J0 - Jw)
    b2 = -c4 / Um * (J0 - Jw)
    b3 = c4 / Up * (1 + e1) / (1 + e2) * (J0 + Jw)
    b4 = -c4 / Up * (J0 + Jw)
    psi1 = (E2L * (b1 + b2 + b3 + b4) + E2R * (b3 + b4 - b1 - b2) + S
            + (E1L - E2L) * (b2 + b4) + (E1R - E2R) * (b4 - b2))
    psi2 = lam * psi1 + F1
    if not return_ingredients:
        return psi1, psi2
    beta = np.concatenate([b1, b2, b3, b4], axis=-1)
    ing = ResolventIngredients(lam, a1, a2, I, v, J, S, Um, Up, beta, variant)
    return psi1, psi2, ing


def resolve_A(lam: complex, F: StateVector, variant: str = "sine", *,
              spectral_margin: float = 1e-8, return_ingredients: bool = False):
    """``(A - lambda)^{-1} F`` by the kernel formulas.

    Parameters
    ----------
    lam : complex
        Spectral parameter off ``[0, inf)`` and away from eigenvalues.
    F : StateVector
        Right-hand side with clamped first component.
    variant : {"sine", "omega"}
        Which ``U`` denominators to use.

    Returns
    -------
    StateVector
        ``(psi1, psi2)``; with ``return_ingredients`` also the
        :class:`ResolventIngredients`.

    Examples
    --------
    >>> import numpy as np
    >>> g = AngularGrid(np.pi / 2, 65)
    >>> th = g.nodes
    >>> F = StateVector(np.zeros(65), th**2 * (g.omega - th)**2, g)
    >>> psi = resolve_A(-1.0, F)
    >>> bool(abs(psi.psi1[0]) < 1e-12)
    True
    """
    out = resolve_A_arrays(lam, F.psi1, F.psi2, F.grid, variant=variant,
                           spectral_margin=spectral_margin, return_ingredients=return_ingredients)
    sv = StateVector(out[0], out[1], F.grid, "D(A)")
    return (sv, out[2]) if return_ingredients else sv


# ---------------------------------------------------------------------------
# finite-difference oracles
# ---------------------------------------------------------------------------
def fd_solve_bvp(lam: complex, G: np.ndarray, grid: AngularGrid) -> np.ndarray:
    """Dense solve of ``psi'''' + 2(lambda+1) psi'' + (lambda-1)^2 psi = G``, clamped.

    ``G`` may be batched along leading axes.  Returns ``psi`` on the full grid
    with zero boundary values.
    """
    D4, D2 = interior_blocks(grid.n, grid.omega)
    lam = complex(lam)
    M = D4 + 2.0 * (lam + 1.0) * D2 + (lam - 1.0) ** 2 * np.eye(grid.n - 2)
    G = np.asarray(G, dtype=np.complex128)
    rhs = G[..., 1:-1].reshape(-1, grid.n - 2).T
    sol = np.linalg.solve(M, rhs).T.reshape(G.shape[:-1] + (grid.n - 2,))
    out = np.zeros(G.shape, dtype=np.complex128)
    out[..., 1:-1] = sol
    return out


def fd_resolve_A_arrays(lam: complex, F1: np.ndarray, F2: np.ndarray, grid: AngularGrid):
    """``(A - lambda)^{-1}`` through the dense boundary-value oracle."""
    F1 = np.asarray(F1, dtype=np.complex128)
    F2 = np.asarray(F2, dtype=np.complex128)
    lam = complex(lam)
    G = -F2 - 2.0 * (d2(F1, grid) - F1) - lam * F1
    psi1 = fd_solve_bvp(lam, G, grid)
    return psi1, lam * psi1 + F1


def fd_resolve_A(lam: complex, F: StateVector) -> StateVector:
    psi1, psi2 = fd_resolve_A_arrays(lam, F.psi1, F.psi2, F.grid)
    return StateVector(psi1, psi2, F.grid, "D(A)")


def solve_A_at_zero(F: StateVector) -> StateVector:
    """``A^{-1} F``: the ``lambda = 0`` problem by a dense finite-difference solve.

    At ``lambda = 0`` the characteristic roots ``+-i`` are double and the
    kernel construction does not apply.  ``psi2 = F1`` holds exactly.
    """
    G = -F.psi2 - 2.0 * (d2(F.psi1, F.grid) - F.psi1)
    psi1 = fd_solve_bvp(0.0, G, F.grid)
    D4, D2 = interior_blocks(F.grid.n, F.grid.omega)
    M = D4 + 2.0 * D2 + np.eye(F.grid.n - 2)
    cond = np.linalg.cond(M)
    if not np.isfinite(cond) or cond > 1e14:
        raise ResolventError(f"singular lambda = 0 system (condition {cond:.2e})")
    return StateVector(psi1, F.psi1.copy(), F.grid, "D(A)")


# ---------------------------------------------------------------------------
# corpus-level measurements
# ---------------------------------------------------------------------------
def norm_ratio(lam: complex, corpus: np.ndarray, grid: AngularGrid, p: float, *,
               method: str = "kernel", variant: str = "sine") -> np.ndarray:
    """``x_norm((A - lambda)^{-1} F) / x_norm(F)`` for every corpus member.

    ``corpus`` has shape ``(m, 2, N_theta)``.  ``method`` is ``"kernel"``,
    ``"fd"`` or, for ``lambda = 0``, ignored (the dense solve is used).
    """
    corpus = np.asarray(corpus, dtype=np.complex128)
    F1, F2 = corpus[:, 0], corpus[:, 1]
    if complex(lam) == 0:
        G = -F2 - 2.0 * (d2(F1, grid) - F1)
        psi1 = fd_solve_bvp(0.0, G, grid)
        psi2 = F1
    elif method == "kernel":
        psi1, psi2 = resolve_A_arrays(lam, F1, F2, grid, variant=variant)
    elif method == "fd":
        psi1, psi2 = fd_resolve_A_arrays(lam, F1, F2, grid)
    else:
        raise ValueError(f"unknown method {method!r}")
    out = np.stack([psi1, psi2], axis=1)
    return x_norm(out, p, grid) / x_norm(corpus, p, grid)


def discrete_resolvent_norm(lam: complex, grid: AngularGrid) -> float:
    """Spectral 2-norm of ``(A_h - lambda)^{-1}`` on interior unknowns."""
    M = A_matrix(grid) - complex(lam) * np.eye(2 * (grid.n - 2))
    return float(1.0 / np.linalg.svd(M, compute_uv=False)[-1])


@dataclass
class ResolventBoundReport:
    lambdas: np.ndarray
    ratios: np.ndarray
    scaled: np.ndarray  # (1 + |lambda|) * ratio
    M: float
    tail_slope: float
    passed: bool

    def as_dict(self) -> dict:
        return {
            "lambdas": [float(np.real(v)) for v in self.lambdas],
            "ratios": [float(v) for v in self.ratios],
            "scaled": [float(v) for v in self.scaled],
            "M": self.M,
            "tail_slope": self.tail_slope,
            "passed": self.passed,
        }


def verify_resolvent_bound(lambdas, corpus: np.ndarray, grid: AngularGrid, p: float, *,
                           tail_from: float = 1e2, slope_tol: float = 0.15,
                           variant: str = "sine") -> ResolventBoundReport:
    """Measure ``r(lambda) = max_F ||R(lambda) F|| / ||F||`` along ``lambda <= 0``.

    Passes when ``(1 + |lambda|) r(lambda)`` is finite across the sweep and
    the least-squares log-log slope of ``r`` against ``|lambda|`` for
    ``|lambda| >= tail_from`` is ``-1 +- slope_tol``.
    """
    lambdas = np.asarray(lambdas, dtype=float)
    ratios = np.array([float(np.max(norm_ratio(l, corpus, grid, p, variant=variant))) for l in lambdas])
    scaled = (1.0 + np.abs(lambdas)) * ratios
    tail = np.abs(lambdas) >= tail_from
    if tail.sum() >= 2:
        slope = float(np.polyfit(np.log(np.abs(lambdas[tail])), np.log(ratios[tail]), 1)[0])
    else:
        slope = float("nan")
    M = float(np.max(scaled))
    ok = bool(np.all(np.isfinite(scaled)) and abs(slope + 1.0) <= slope_tol)
    return ResolventBoundReport(lambdas, ratios, scaled, M, slope, ok)


# ---------------------------------------------------------------------------
# lemma inequalities
# ---------------------------------------------------------------------------
@dataclass
class Inequality:
    name: str
    lhs: float
    rhs: float

    @property
    def slack(self) -> float:
        return self.rhs - self.lhs

    @property
    def relative_slack(self) -> float:
        """``(rhs - lhs) / rhs``; both sides scale with powers of ``|lambda|``."""
        return self.slack / self.rhs if self.rhs > 0 else (0.0 if self.lhs == 0 else -math.inf)

    @property
    def holds(self) -> bool:
        return self.lhs <= self.rhs

    def as_dict(self) -> dict:
        return {"name": self.name, "lhs": self.lhs, "rhs": self.rhs, "slack": self.slack,
                "relative_slack": self.relative_slack, "holds": self.holds}


def _exp_diff_norm(lam: float, omega: float, p: float, side: str = "left", n: int = 20001) -> float:
    """``|| e^{-x alpha1} - e^{-x alpha2} ||_{L^p(0, omega)}`` with ``x = theta`` or ``omega - theta``."""
    th = np.linspace(0.0, omega, n)
    x = th if side == "left" else omega - th
    a = math.sqrt(-lam)
    f = np.exp(-x * (a + 1j)) - np.exp(-x * (a - 1j))
    return float(lp_norm(f, omega / (n - 1), p))


def verify_lemma_bounds(lam: float, F: StateVector, p: float, eps0: float, *,
                        variant: str = "sine") -> list[Inequality]:
    """Evaluate every kernel and constant estimate at real ``lambda <= -eps0``.

    Left sides come from one resolvent evaluation on ``F.grid``; right sides
    are the closed-form bounds.  Returned in a fixed order: the five kernel
    estimates, the two exponential-difference estimates and the two
    boundary-constant estimates.
    """
    lam = float(lam)
    if lam > -eps0:
        raise ValueError(f"lemma bounds need lambda <= -eps0 = {-eps0}")
    grid = F.grid
    om, h = grid.omega, grid.h
    _, _, ing = resolve_A_arrays(lam, F.psi1, F.psi2, grid, variant=variant, return_ingredients=True)
    nF = (float(lp_norm(F.psi2, h, p)) + 2.0 * float(lp_norm(F.psi1, h, p))
          + 3.0 * float(lp_norm(d2(F.psi1, grid), h, p)))
    a = math.sqrt(-lam)
    se = math.sqrt(eps0)
    M1 = 2.0 + 2.0 / (1.0 - math.exp(-2.0 * om * se))
    f0 = 1.0 - math.exp(-2.0 * om * se) - 2.0 * om * se * math.exp(-om * se)
    nv = float(lp_norm(ing.v, h, p))
    out = [
        Inequality("I_norm", float(lp_norm(ing.I, h, p)), 2.0 / a * nF),
        Inequality("I_ends", abs(ing.I[0]) + abs(ing.I[-1]), 2.0 / a ** (1.0 - 1.0 / p) * nF),
        Inequality("v_norm", nv, M1 / (-lam) * nF),
        Inequality("J_norm", float(lp_norm(ing.J, h, p)), 2.0 / a * nv),
        Inequality("J_ends", abs(ing.J[0]) + abs(ing.J[-1]), 2.0 / a ** (1.0 - 1.0 / p) * nv),
    ]
    bound = 4.0 / a ** (1.0 + 1.0 / p)
    out.append(Inequality("exp_diff_left", _exp_diff_norm(lam, om, p, "left"), bound))
    out.append(Inequality("exp_diff_right", _exp_diff_norm(lam, om, p, "right"), bound))
    b1, b2, b3, b4 = ing.beta
    rhs_sum = M1 * nF / (om * (-lam) * a ** (2.0 - 1.0 / p) * f0 * (1.0 - math.exp(-om * se)))
    rhs_single = M1 * nF / (2.0 * (-lam) * a ** (1.0 - 1.0 / p) * f0)
    out.append(Inequality("beta_pairs", max(abs(b1 + b2), abs(b3 + b4)), rhs_sum))
    out.append(Inequality("beta_single", max(abs(b2), abs(b4)), rhs_single))
    return out


def lemma_identity_residual(alpha: complex, omega: float, n: int = 2049) -> float:
    """Relative residual of ``K[f] = (2/alpha) f + K[f'']/alpha^2`` for a clamped ``f``.

    Uses ``f = sin^2(pi theta/omega) exp(theta/omega)`` with its exact second
    derivative and Richardson-extrapolated kernels, so the residual reflects
    the identity and not the quadrature.
    """
    k = math.pi / omega

    def f(th):
        return np.sin(k * th) ** 2 * np.exp(th / omega)

    def fpp(th):
        s, c = np.sin(k * th), np.cos(k * th)
        e = np.exp(th / omega)
        u = s * s
        up = 2 * k * s * c
        upp = 2 * k * k * (c * c - s * s)
        return e * (upp + 2 * up / omega + u / omega**2)

    nodes, Kf = kernel_convolution_extrapolated(alpha, f, omega, n)
    _, Kfpp = kernel_convolution_extrapolated(alpha, fpp, omega, n)
    rhs = 2.0 / alpha * f(nodes) + Kfpp / alpha**2
    return float(np.max(np.abs(Kf - rhs)) / np.max(np.abs(Kf)))


def measure_sector_angle(grid: AngularGrid, corpus: np.ndarray, p: float, *,
                         moduli=(1.0, 10.0, 100.0, 1000.0), angles=None, factor: float = 2.0) -> dict:
    """Empirical half-angle around the negative axis where ``|lambda| ||R(lambda)||`` stays bounded.

    For each angle ``phi`` measured from the negative real axis, the largest
    value of ``(1 + |lambda|) r(lambda)`` over ``moduli`` is compared with its
    value on the axis itself; the usable angle is the largest ``phi`` whose
    value stays within ``factor`` times the axis value.
    """
    if angles is None:
        angles = np.linspace(0.0, 0.9 * math.pi, 19)
    vals = []
    for phi in angles:
        best = 0.0
        for r in moduli:
            lam = -r * np.exp(1j * phi)
            try:
                rr = float(np.max(norm_ratio(lam, corpus, grid, p)))
            except ResolventError:
                rr = math.inf
            best = max(best, (1.0 + r) * rr)
        vals.append(best)
    vals = np.array(vals)
    ok = vals <= factor * vals[0]
    usable = 0.0
    for phi, good in zip(angles, ok):
        if not good:
            break
        usable = float(phi)
    return {"angles": [float(a) for a in angles], "scaled_norms": [float(v) for v in vals],
            "usable_angle": usable, "factor": factor}
