"""Contour-integral inverse of the operator sum ``L1 + L2`` with ``L2 = -A``.

The solution of ``L1 V - A V = F`` is written as

    V = (1 / 2 pi i) int_Gamma (L1 - z)^{-1} (A - z)^{-1} F dz,

which is the usual sum formula ``-(1/2 pi i) int (M1 - z)^{-1} (M2 + z)^{-1} dz``
with ``M1 = L1``, ``M2 = L2 = -A`` and ``(L2 + z)^{-1} = -(A - z)^{-1}``.  The path
``Gamma`` is the parabola ``Re sqrt(z) = nu'`` traversed upwards, with ``nu``
strictly below ``nu'`` and ``nu'`` strictly below every ``Re sqrt(lambda_j)`` of
the angular spectrum.  It is parameterized by ``z(s) = (nu' + i s)^2``.  The
parameter ``s`` is mapped to ``u`` by ``s = c sinh(u)``, which packs nodes near
the vertex where the integrand peaks.  Midpoint nodes are then placed on
``[-U, U]``.

Two inner-resolvent backends are available.

``"discrete"``
    Dense LU of ``A_h - z`` (clamped interior matrix) and a banded solve with
    the Dirichlet matrix ``L1_h - z``.  The quadrature then approximates the
    exact inverse of ``L1_h (x) I - I (x) A_h``, so :func:`direct_sum_solve` is a
    sharp oracle.
``"formula"``
    The closed-form kernels of :mod:`conesolve.angular` and
    :mod:`conesolve.temporal`.  This converges to the continuous inverse at
    second order in both grid spacings.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .angular import resolve_A_arrays
from .grid import (AngularGrid, ProblemParams, SpaceTimeField, TemporalGrid, A_matrix,
                   L1_dirichlet_matrix, e_norm)
from .roots import min_re_sqrt
from .temporal import L1_discrete_spectrum, resolve_L1_array


class ContourError(ValueError):
    """The contour cannot separate the two spectra."""


class SolverError(RuntimeError):
    """Singular or ill-conditioned coupled system."""


@dataclass(frozen=True)
class Contour:
    """Quadrature nodes on ``Re sqrt(z) = nu_prime``."""

    nu: float
    nu_prime: float
    s: np.ndarray
    z: np.ndarray
    weights: np.ndarray  # dz/ds * ds, complex
    scale: float
    s_max: float
    margin: float
    eig_distance: float

    @property
    def n_nodes(self) -> int:
        return int(self.s.size)

    def refined(self, factor: int = 2) -> "Contour":
        """Same path with ``factor`` times more nodes."""
        return _make_contour(self.nu, self.nu_prime, self.n_nodes * factor, self.s_max,
                             self.scale, self.margin, self.eig_distance)

    def as_dict(self) -> dict:
        return {"nu": self.nu, "nu_prime": self.nu_prime, "n_nodes": self.n_nodes,
                "s_max": self.s_max, "scale": self.scale, "margin": self.margin,
                "eig_distance": self.eig_distance}


def _make_contour(nu, nu_prime, n_nodes, s_max, scale, margin, eig_distance) -> Contour:
    U = math.asinh(s_max / scale)
    hu = 2.0 * U / n_nodes
    u = -U + hu * (np.arange(n_nodes) + 0.5)
    s = scale * np.sinh(u)
    ds = scale * np.cosh(u) * hu
    w = nu_prime + 1j * s
    z = w * w
    weights = 2j * w * ds
    return Contour(float(nu), float(nu_prime), s, z, weights, float(scale), float(s_max),
                   float(margin), float(eig_distance))


def build_contour(params: ProblemParams, eigs, n_nodes: int = 200, s_max: float = 1e3, *,
                  scale: float = 1.0, spectral_margin: float = 1e-2,
                  nu_prime: float | None = None) -> Contour:
    """Parabolic contour halfway between ``nu`` and the lowest ``Re sqrt(lambda_j)``.

    Parameters
    ----------
    params : ProblemParams
        Supplies ``nu = 3 - 2/p``.
    eigs : sequence of complex
        Angular eigenvalues (sine family by default upstream).
    nu_prime : float, optional
        Override of the abscissa; must still separate the spectra.

    Raises
    ------
    ContourError
        If ``min Re sqrt(lambda_j) <= nu`` or a node comes closer than
        ``spectral_margin`` to an eigenvalue.
    """
    eigs = np.asarray(list(eigs), dtype=np.complex128)
    if eigs.size == 0:
        raise ContourError("empty eigenvalue list")
    if n_nodes < 2 or s_max <= 0 or scale <= 0:
        raise ContourError("n_nodes >= 2, s_max > 0 and scale > 0 are required")
    nu = params.nu
    top = min_re_sqrt(eigs)
    margin = top - nu
    if margin <= 0:
        raise ContourError(
            f"hypothesis omega*nu < tau violated or eigenvalue too low "
            f"(min Re sqrt(lambda) = {top:.6g} <= nu = {nu:.6g})")
    if nu_prime is None:
        nu_prime = 0.5 * (nu + top)
    elif not (nu < nu_prime < top):
        raise ContourError(f"nu_prime = {nu_prime} does not lie in ({nu}, {top})")
    c = _make_contour(nu, nu_prime, n_nodes, s_max, scale, margin, np.inf)
    dist = float(np.min(np.abs(c.z[:, None] - eigs[None, :])))
    if dist < spectral_margin:
        raise ContourError(f"contour node within {dist:.3e} of an eigenvalue")
    return _make_contour(nu, nu_prime, n_nodes, s_max, scale, margin, dist)


@dataclass
class DiscreteSeparation:
    a_min_re_sqrt: float
    l1_max_re_sqrt: float
    nu_prime: float

    @property
    def ok(self) -> bool:
        return self.l1_max_re_sqrt < self.nu_prime < self.a_min_re_sqrt


def discrete_separation(contour: Contour, agrid: AngularGrid, tgrid: TemporalGrid) -> DiscreteSeparation:
    """Check that the contour also separates the spectra of ``A_h`` and ``L1_h``."""
    ev_a = np.linalg.eigvals(A_matrix(agrid))
    ev_l = L1_discrete_spectrum(tgrid, contour.nu)
    return DiscreteSeparation(float(np.min(np.sqrt(ev_a.astype(complex)).real)),
                              float(np.max(np.sqrt(ev_l.astype(complex)).real)),
                              contour.nu_prime)


# ---------------------------------------------------------------------------
# application
# ---------------------------------------------------------------------------
def pairwise_sum(items: list[np.ndarray]) -> np.ndarray:
    """Deterministic tree sum, independent of any runtime scheduling."""
    if not items:
        raise ValueError("nothing to sum")
    while len(items) > 1:
        nxt = [items[i] + items[i + 1] for i in range(0, len(items) - 1, 2)]
        if len(items) % 2:
            nxt.append(items[-1])
        items = nxt
    return items[0]


def _interior(values: np.ndarray) -> np.ndarray:
    """``(N_t, 2, N_th)`` -> ``(N_t - 2, 2 (N_th - 2))`` interior unknowns."""
    inner = values[1:-1, :, 1:-1]
    return inner.reshape(inner.shape[0], -1)


def _embed(inner: np.ndarray, tgrid: TemporalGrid, agrid: AngularGrid) -> np.ndarray:
    out = np.zeros((tgrid.n, 2, agrid.n), dtype=np.complex128)
    out[1:-1, :, 1:-1] = inner.reshape(tgrid.n - 2, 2, agrid.n - 2)
    return out


@dataclass
class DPGInverter:
    """Cached contour inverse for fixed grids (reused across fixed-point steps)."""

    contour: Contour
    tgrid: TemporalGrid
    agrid: AngularGrid
    backend: str = "discrete"
    _lu: list = field(default_factory=list, repr=False)
    _bands: list = field(default_factory=list, repr=False)

    def __post_init__(self) -> None:
        if self.backend not in ("discrete", "formula"):
            raise ValueError(f"unknown backend {self.backend!r}")
        if self.backend == "discrete":
            A = A_matrix(self.agrid).astype(np.complex128)
            eye = np.eye(A.shape[0])
            L1 = L1_dirichlet_matrix(self.tgrid, self.contour.nu)
            lower = L1.diagonal(-1)
            diag = L1.diagonal(0)
            upper = L1.diagonal(1)
            for z in self.contour.z:
                self._lu.append(sla.lu_factor(A - z * eye, check_finite=False))
                ab = np.zeros((3, diag.size), dtype=np.complex128)
                ab[0, 1:] = upper
                ab[1, :] = diag - z
                ab[2, :-1] = lower
                self._bands.append(ab)

    def node_terms(self, values: np.ndarray) -> list[np.ndarray]:
        """Per-node weighted contributions ``w_q (L1 - z_q)^{-1} (A - z_q)^{-1} F / (2 pi i)``."""
        c = self.contour
        terms = []
        if self.backend == "discrete":
            Fi = _interior(values).T  # (2m, k)
            for q in range(c.n_nodes):
                Y = sla.lu_solve(self._lu[q], Fi, check_finite=False)  # (2m, k)
                X = sla.solve_banded((1, 1), self._bands[q], Y.T, check_finite=False)
                terms.append(c.weights[q] / (2j * math.pi) * X)
        else:
            F1 = values[:, 0]
            F2 = values[:, 1]
            for q in range(c.n_nodes):
                z = complex(c.z[q])
                p1, p2 = resolve_A_arrays(z, F1, F2, self.agrid)
                Y = np.stack([p1, p2], axis=1)
                X = resolve_L1_array(z, Y, self.tgrid, c.nu)
                terms.append(c.weights[q] / (2j * math.pi) * X)
        return terms

    def apply_values(self, values: np.ndarray, *, real: bool | None = None) -> np.ndarray:
        values = np.asarray(values, dtype=np.complex128)
        total = pairwise_sum(self.node_terms(values))
        out = _embed(total, self.tgrid, self.agrid) if self.backend == "discrete" else total
        if real is None:
            real = bool(np.all(values.imag == 0))
        if real:
            # conjugate nodes pair up exactly on the symmetric contour
            out = out.real.astype(np.complex128)
        return out

    def apply(self, F: SpaceTimeField) -> SpaceTimeField:
        return F.like(self.apply_values(F.values))


def dpg_apply_inverse(F: SpaceTimeField, contour: Contour, backend: str = "discrete") -> SpaceTimeField:
    """One-shot contour inverse; see :class:`DPGInverter` for repeated use."""
    return DPGInverter(contour, F.tgrid, F.agrid, backend).apply(F)


def contour_dump(F: SpaceTimeField, contour: Contour, backend: str = "discrete", p: float = 2.0) -> np.ndarray:
    """Rows ``(s, Re z, Im z, |integrand|)`` with ``|integrand|`` the E-norm per unit ``s``."""
    inv = DPGInverter(contour, F.tgrid, F.agrid, backend)
    terms = inv.node_terms(F.values)
    ds = np.abs(contour.weights) / np.abs(2.0 * (contour.nu_prime + 1j * contour.s))
    rows = []
    for q, term in enumerate(terms):
        full = _embed(term, F.tgrid, F.agrid) if backend == "discrete" else term
        mag = e_norm(full, p, F.tgrid, F.agrid) / ds[q]
        rows.append((contour.s[q], contour.z[q].real, contour.z[q].imag, mag))
    return np.asarray(rows)


# ---------------------------------------------------------------------------
# direct oracle
# ---------------------------------------------------------------------------
def coupled_matrix(tgrid: TemporalGrid, agrid: AngularGrid, nu: float) -> sp.csc_matrix:
    """``L1_h (x) I - I (x) A_h`` on interior unknowns, time-major ordering."""
    A = sp.csr_matrix(A_matrix(agrid))
    L1 = L1_dirichlet_matrix(tgrid, nu)
    k = tgrid.n - 2
    M = sp.kron(L1, sp.identity(A.shape[0])) - sp.kron(sp.identity(k), A)
    return M.astype(np.complex128).tocsc()


def direct_sum_solve(F: SpaceTimeField, nu: float, *, solver_tol: float = 1e-10,
                     max_unknowns: int = 400_000) -> SpaceTimeField:
    """Sparse LU solve of the coupled space-time system.

    Raises
    ------
    SolverError
        If the system is too large or the solve residual exceeds ``solver_tol``.
    """
    tg, ag = F.tgrid, F.agrid
    n_unknowns = (tg.n - 2) * 2 * (ag.n - 2)
    if n_unknowns > max_unknowns:
        raise SolverError(f"{n_unknowns} unknowns exceed the direct-solver budget {max_unknowns}")
    M = coupled_matrix(tg, ag, nu)
    rhs = _interior(F.values).ravel()
    lu = spla.splu(M)
    x = lu.solve(rhs)
    scale = max(np.linalg.norm(rhs), 1e-300)
    res = np.linalg.norm(M @ x - rhs) / scale
    if not np.isfinite(res) or res > solver_tol:
        diag_u = np.abs(lu.U.diagonal())
        cond = float(diag_u.max() / max(diag_u.min(), 1e-300))
        raise SolverError(f"coupled solve residual {res:.3e} (pivot-ratio condition estimate {cond:.3e})")
    return F.like(_embed(x.reshape(tg.n - 2, -1), tg, ag))


def coupled_residual(V: SpaceTimeField, F: SpaceTimeField, nu: float) -> float:
    """``||(L1_h - A_h) V - F|| / ||F||`` on interior unknowns (Euclidean)."""
    M = coupled_matrix(V.tgrid, V.agrid, nu)
    r = M @ _interior(V.values).ravel() - _interior(F.values).ravel()
    return float(np.linalg.norm(r) / max(np.linalg.norm(_interior(F.values)), 1e-300))


def relative_discrepancy(V: SpaceTimeField, W: SpaceTimeField, p: float = 2.0) -> float:
    """``||V - W||_E / ||W||_E``."""
    den = e_norm(W, p)
    return float(e_norm(V - W, p) / den) if den > 0 else float(e_norm(V - W, p))


__all__ = [
    "Contour", "ContourError", "DPGInverter", "DiscreteSeparation", "SolverError",
    "build_contour", "contour_dump", "coupled_matrix", "coupled_residual",
    "direct_sum_solve", "discrete_separation", "dpg_apply_inverse", "pairwise_sum",
    "relative_discrepancy",
]
