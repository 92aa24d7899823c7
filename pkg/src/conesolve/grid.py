"""Discretization substrate: grids, fields, norms, stencils and operators.

The angular variable ``theta`` lives on ``[0, omega]`` and the temporal
variable ``t`` on ``[0, T]`` (a truncation of the half line).  Everything is
stored as complex arrays because resolvents are evaluated at complex
spectral parameters.

Operators
---------
With ``d2``/``d4`` the angular stencils and ``nu = 3 - 2/p``:

* ``A(psi1, psi2)  = (psi2, -(d2 + 1)^2 psi1 - 2 (d2 - 1) psi2)``
* ``A0(psi1, psi2) = (0, (d2 + 1) psi1 + psi2)``
* ``B2 V           = (0, -2 (d_t - nu) V1)``
* ``L1 V           = (d_t - nu)^2 V``

Clamped closure
---------------
A clamped function satisfies ``psi = psi' = 0`` at both ends.  The ghost
value outside the interval is eliminated through a seven-point one-sided
first-derivative condition, so that fourth-derivative stencils keep second
order accuracy at the first interior node.  Rows sitting on the boundary
itself use one-sided stencils of second order.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.sparse as sp


class GridError(ValueError):
    """Raised for malformed grids or mismatched field shapes."""


class DomainError(ValueError):
    """Raised when a field violates the boundary tags of an operator domain."""


# ---------------------------------------------------------------------------
# parameters and grids
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class ProblemParams:
    """Physical parameters ``(p, omega, k, rho)``; ``nu`` is derived from ``p``.

    Parameters
    ----------
    p : float
        Integrability exponent, ``1 < p < inf``.
    omega : float
        Opening angle of the sector, in radians, ``0 < omega <= 2 pi``.
    k : float
        Dispersal coefficient, positive.
    rho : float
        Sector radius, positive.
    """

    p: float = 2.0
    omega: float = math.pi / 2
    k: float = 1.0
    rho: float = 0.1

    def __post_init__(self) -> None:
        if not (1.0 < self.p < math.inf):
            raise ValueError(f"p must lie in (1, inf), got {self.p}")
        if not (0.0 < self.omega <= 2.0 * math.pi + 1e-15):
            raise ValueError(f"omega must lie in (0, 2 pi], got {self.omega}")
        if self.k < 0.0:
            raise ValueError(f"k must be nonnegative, got {self.k}")
        if self.rho <= 0.0:
            raise ValueError(f"rho must be positive, got {self.rho}")

    @property
    def nu(self) -> float:
        return 3.0 - 2.0 / self.p

    def replace(self, **changes) -> "ProblemParams":
        data = dict(p=self.p, omega=self.omega, k=self.k, rho=self.rho)
        data.update(changes)
        return ProblemParams(**data)


@dataclass(frozen=True)
class AngularGrid:
    """Uniform grid ``theta_i = i omega / (n - 1)`` on ``[0, omega]``."""

    omega: float
    n: int

    def __post_init__(self) -> None:
        if self.n < 7:
            raise GridError(f"angular grid needs at least 7 nodes, got {self.n}")
        if self.omega <= 0:
            raise GridError("omega must be positive")

    @property
    def h(self) -> float:
        return self.omega / (self.n - 1)

    @property
    def nodes(self) -> np.ndarray:
        return np.linspace(0.0, self.omega, self.n)


@dataclass(frozen=True)
class TemporalGrid:
    """Uniform grid ``t_m = m T / (n - 1)`` on the truncated half line."""

    T: float
    n: int

    def __post_init__(self) -> None:
        if self.n < 7:
            raise GridError(f"temporal grid needs at least 7 nodes, got {self.n}")
        if self.T <= 0:
            raise GridError("T must be positive")

    @property
    def h(self) -> float:
        return self.T / (self.n - 1)

    @property
    def nodes(self) -> np.ndarray:
        return np.linspace(0.0, self.T, self.n)


def truncation_length(nu: float, nu_prime: float, decay_tol: float = 1e-10) -> float:
    """Smallest ``T`` with ``exp(-(nu' - nu) T) < decay_tol``."""
    if nu_prime <= nu:
        raise ValueError("contour abscissa must exceed nu")
    return math.log(1.0 / decay_tol) / (nu_prime - nu)


@dataclass
class StateVector:
    """A pair ``(psi1, psi2)`` sampled on an :class:`AngularGrid`.

    ``domain`` is either ``"X"`` (``psi1`` clamped, ``psi2`` arbitrary) or
    ``"D(A)"`` (both components clamped).
    """

    psi1: np.ndarray
    psi2: np.ndarray
    grid: AngularGrid
    domain: str = "X"

    def __post_init__(self) -> None:
        self.psi1 = np.asarray(self.psi1, dtype=np.complex128)
        self.psi2 = np.asarray(self.psi2, dtype=np.complex128)
        if self.psi1.shape != (self.grid.n,) or self.psi2.shape != (self.grid.n,):
            raise GridError("state vector components must match the angular grid")
        if self.domain not in ("X", "D(A)"):
            raise ValueError(f"unknown domain tag {self.domain!r}")

    @classmethod
    def zeros(cls, grid: AngularGrid, domain: str = "X") -> "StateVector":
        z = np.zeros(grid.n, dtype=np.complex128)
        return cls(z, z.copy(), grid, domain)

    def stacked(self) -> np.ndarray:
        return np.stack([self.psi1, self.psi2])

    def conj(self) -> "StateVector":
        return StateVector(self.psi1.conj(), self.psi2.conj(), self.grid, self.domain)

    def __add__(self, other: "StateVector") -> "StateVector":
        _same_grid(self.grid, other.grid)
        return StateVector(self.psi1 + other.psi1, self.psi2 + other.psi2, self.grid, self.domain)

    def __sub__(self, other: "StateVector") -> "StateVector":
        _same_grid(self.grid, other.grid)
        return StateVector(self.psi1 - other.psi1, self.psi2 - other.psi2, self.grid, self.domain)

    def __mul__(self, c: complex) -> "StateVector":
        return StateVector(c * self.psi1, c * self.psi2, self.grid, self.domain)

    __rmul__ = __mul__

    def clamp_defect(self) -> float:
        """Largest boundary value or one-sided slope among the clamped components."""
        comps = [self.psi1] + ([self.psi2] if self.domain == "D(A)" else [])
        return max(clamp_defect(c, self.grid) for c in comps)


@dataclass
class SpaceTimeField:
    """A map ``t -> StateVector`` on a temporal grid.

    ``values`` has shape ``(N_t, 2, N_theta)``; ``values[:, 0]`` is the first
    component and ``values[:, 1]`` the second.
    """

    values: np.ndarray
    tgrid: TemporalGrid
    agrid: AngularGrid
    meta: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=np.complex128)
        want = (self.tgrid.n, 2, self.agrid.n)
        if self.values.shape != want:
            raise GridError(f"field shape {self.values.shape} does not match grids {want}")

    @classmethod
    def zeros(cls, tgrid: TemporalGrid, agrid: AngularGrid) -> "SpaceTimeField":
        return cls(np.zeros((tgrid.n, 2, agrid.n), dtype=np.complex128), tgrid, agrid)

    @classmethod
    def from_function(cls, fn, tgrid: TemporalGrid, agrid: AngularGrid) -> "SpaceTimeField":
        """Sample ``fn(t, theta) -> (v1, v2)`` on the tensor grid."""
        t = tgrid.nodes[:, None]
        th = agrid.nodes[None, :]
        v1, v2 = fn(t, th)
        vals = np.empty((tgrid.n, 2, agrid.n), dtype=np.complex128)
        vals[:, 0] = np.broadcast_to(v1, (tgrid.n, agrid.n))
        vals[:, 1] = np.broadcast_to(v2, (tgrid.n, agrid.n))
        return cls(vals, tgrid, agrid)

    @property
    def v1(self) -> np.ndarray:
        return self.values[:, 0]

    @property
    def v2(self) -> np.ndarray:
        return self.values[:, 1]

    def like(self, values: np.ndarray) -> "SpaceTimeField":
        return SpaceTimeField(values, self.tgrid, self.agrid)

    def at(self, m: int) -> StateVector:
        return StateVector(self.values[m, 0], self.values[m, 1], self.agrid)

    def __add__(self, other: "SpaceTimeField") -> "SpaceTimeField":
        _same_field_grids(self, other)
        return self.like(self.values + other.values)

    def __sub__(self, other: "SpaceTimeField") -> "SpaceTimeField":
        _same_field_grids(self, other)
        return self.like(self.values - other.values)

    def __mul__(self, c: complex) -> "SpaceTimeField":
        return self.like(c * self.values)

    __rmul__ = __mul__


def _same_grid(a: AngularGrid, b: AngularGrid) -> None:
    if a != b:
        raise GridError("angular grids differ")


def _same_field_grids(a: SpaceTimeField, b: SpaceTimeField) -> None:
    if a.tgrid != b.tgrid or a.agrid != b.agrid:
        raise GridError("space-time grids differ")


# ---------------------------------------------------------------------------
# stencils
# ---------------------------------------------------------------------------
def fd_weights(offsets, deriv: int) -> np.ndarray:
    """Finite-difference weights for the ``deriv``-th derivative at offset 0.

    ``offsets`` are node positions in units of the grid spacing.  The weights
    solve the Vandermonde moment system, so they are exact on polynomials of
    degree ``len(offsets) - 1``.
    """
    x = np.asarray(offsets, dtype=float)
    n = x.size
    V = np.vander(x, n, increasing=True).T
    rhs = np.zeros(n)
    rhs[deriv] = math.factorial(deriv)
    return np.linalg.solve(V, rhs)


def _clamped_ghost(side: str) -> tuple[np.ndarray, np.ndarray]:
    """Express the ghost value next to a clamped end through interior nodes.

    Returns node indices (relative to the boundary node, pointing inward) and
    coefficients ``c`` with ``ghost = sum c_j psi_j``.
    """
    offs = np.arange(-1, 6)
    w = fd_weights(offs, 1)
    coeff = -w[1:] / w[0]
    idx = np.arange(0, 6)
    return idx, coeff


@lru_cache(maxsize=64)
def _diff_matrix_cached(n: int, deriv: int, closure: str) -> sp.csr_matrix:
    if closure not in ("clamped", "free"):
        raise ValueError(f"unknown closure {closure!r}")
    half = {1: 1, 2: 1, 4: 2}[deriv]
    centered = np.arange(-half, half + 1)
    wc = fd_weights(centered, deriv)
    npts_side = deriv + 2 if deriv != 1 else 3
    gidx, gcoef = _clamped_ghost("left")
    rows, cols, vals = [], [], []

    def put(i, js, ws):
        for j, w in zip(js, ws):
            rows.append(i)
            cols.append(j)
            vals.append(w)

    for i in range(n):
        lo, hi = i - half, i + half
        if lo >= 0 and hi <= n - 1:
            put(i, i + centered, wc)
            continue
        at_edge = i == 0 or i == n - 1
        if closure == "clamped" and not at_edge and deriv == 4:
            # node 1 or n-2: a single ghost value is needed
            left = lo < 0
            js, ws = [], []
            for o, w in zip(centered, wc):
                j = i + o
                if 0 <= j <= n - 1:
                    js.append(j)
                    ws.append(w)
                else:
                    for gi, gc in zip(gidx, gcoef):
                        js.append(gi if left else n - 1 - gi)
                        ws.append(w * gc)
            put(i, js, ws)
            continue
        if closure == "clamped" and at_edge and deriv == 2:
            left = i == 0
            js, ws = [], []
            for o, w in zip(centered, wc):
                j = i + o
                if 0 <= j <= n - 1:
                    js.append(j)
                    ws.append(w)
                else:
                    for gi, gc in zip(gidx, gcoef):
                        js.append(gi if left else n - 1 - gi)
                        ws.append(w * gc)
            put(i, js, ws)
            continue
        # one-sided stencil of second order
        if lo < 0:
            start = 0
            offs = np.arange(start, start + npts_side) - i
        else:
            start = n - npts_side
            offs = np.arange(start, n) - i
        put(i, i + offs, fd_weights(offs, deriv))
    M = sp.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()
    M.sum_duplicates()
    return M


def diff_matrix(n: int, h: float, deriv: int, closure: str = "clamped") -> sp.csr_matrix:
    """Sparse ``n x n`` matrix of the ``deriv``-th derivative (1, 2 or 4).

    ``closure="clamped"`` folds the clamped ghost value into the rows next to
    the boundary; ``closure="free"`` uses one-sided stencils instead, which is
    what one wants for functions that are not clamped.
    """
    return (_diff_matrix_cached(n, deriv, closure) / h**deriv).tocsr()


def _apply_along_last(M: sp.csr_matrix, values: np.ndarray) -> np.ndarray:
    values = np.asarray(values)
    flat = values.reshape(-1, values.shape[-1])
    return np.asarray((M @ flat.T).T).reshape(values.shape)


def d1(values: np.ndarray, grid: AngularGrid, closure: str = "free") -> np.ndarray:
    """First derivative along the last axis."""
    return _apply_along_last(diff_matrix(grid.n, grid.h, 1, closure), values)


def d2(values: np.ndarray, grid: AngularGrid, closure: str = "clamped") -> np.ndarray:
    """Second derivative along the last axis (default clamped closure)."""
    return _apply_along_last(diff_matrix(grid.n, grid.h, 2, closure), values)


def d4(values: np.ndarray, grid: AngularGrid, closure: str = "clamped") -> np.ndarray:
    """Fourth derivative along the last axis (default clamped closure)."""
    return _apply_along_last(diff_matrix(grid.n, grid.h, 4, closure), values)


def clamp_defect(values: np.ndarray, grid: AngularGrid) -> float:
    """``max(|psi(0)|, |psi(omega)|, h |psi'(0)|, h |psi'(omega)|)`` scaled by ``max|psi|``.

    The slope enters multiplied by ``h`` so that the measure is a pure value
    defect, comparable across resolutions.
    """
    v = np.asarray(values)
    scale = max(float(np.max(np.abs(v))), 1e-300)
    w = fd_weights(np.arange(0, 5), 1)
    s0 = abs(np.dot(w, v[:5]))
    s1 = abs(np.dot(w, v[::-1][:5]))
    return max(abs(v[0]), abs(v[-1]), s0, s1) / scale


# ---------------------------------------------------------------------------
# norms
# ---------------------------------------------------------------------------
def trapezoid_weights(n: int, h: float) -> np.ndarray:
    w = np.full(n, h)
    w[0] = w[-1] = 0.5 * h
    return w


def lp_norm(values: np.ndarray, h: float, p: float, axis: int = -1) -> np.ndarray:
    """Discrete ``L^p`` norm ``(sum_i w_i |f_i|^p)^(1/p)`` with trapezoid weights."""
    v = np.abs(np.asarray(values))
    v = np.moveaxis(v, axis, -1)
    w = trapezoid_weights(v.shape[-1], h)
    if p == 2.0:
        return np.sqrt(np.sum(w * v * v, axis=-1))
    return np.sum(w * v**p, axis=-1) ** (1.0 / p)


def w2p_norm(psi1: np.ndarray, grid: AngularGrid, p: float) -> np.ndarray:
    """Three-term ``W_0^{2,p}`` norm ``|psi| + |psi'| + |psi''|`` (batched)."""
    return (
        lp_norm(psi1, grid.h, p)
        + lp_norm(d1(psi1, grid, "free"), grid.h, p)
        + lp_norm(d2(psi1, grid, "clamped"), grid.h, p)
    )


def x_norm(sv: StateVector | np.ndarray, p: float, grid: AngularGrid | None = None) -> np.ndarray:
    """Norm of ``X = W_0^{2,p} x L^p``.

    Accepts a :class:`StateVector` or an array of shape ``(..., 2, N_theta)``.
    """
    if isinstance(sv, StateVector):
        return float(w2p_norm(sv.psi1, sv.grid, p) + lp_norm(sv.psi2, sv.grid.h, p))
    if grid is None:
        raise GridError("grid required for raw arrays")
    arr = np.asarray(sv)
    if arr.shape[-2:] != (2, grid.n):
        raise GridError(f"expected trailing shape (2, {grid.n}), got {arr.shape}")
    return w2p_norm(arr[..., 0, :], grid, p) + lp_norm(arr[..., 1, :], grid.h, p)


def e_norm(field_: SpaceTimeField | np.ndarray, p: float, tgrid: TemporalGrid | None = None,
           agrid: AngularGrid | None = None) -> float:
    """Norm of ``E = L^p(0, T; X)``: the ``L^p``-in-time norm of ``t -> ||V(t)||_X``."""
    if isinstance(field_, SpaceTimeField):
        vals, tgrid, agrid = field_.values, field_.tgrid, field_.agrid
    else:
        vals = np.asarray(field_)
    xs = x_norm(vals, p, agrid)
    return float(lp_norm(xs, tgrid.h, p))


# ---------------------------------------------------------------------------
# angular operators
# ---------------------------------------------------------------------------
def _check_domain(sv: StateVector, domain: str, tol: float) -> None:
    if domain == "D(A)" and sv.domain == "D(A)":
        d = sv.clamp_defect()
        if d > tol:
            raise DomainError(f"state vector violates clamped traces (defect {d:.3e})")


def apply_A_arrays(psi1: np.ndarray, psi2: np.ndarray, grid: AngularGrid) -> tuple[np.ndarray, np.ndarray]:
    """Batched ``A``: returns ``(psi2, -(d2+1)^2 psi1 - 2 (d2 - 1) psi2)``.

    ``(d2 + 1)^2`` is expanded as ``d4 + 2 d2 + 1`` with the clamped stencils.
    """
    D2p1 = d2(psi1, grid)
    D4p1 = d4(psi1, grid)
    D2p2 = d2(psi2, grid)
    out2 = -(D4p1 + 2.0 * D2p1 + psi1) - 2.0 * (D2p2 - psi2)
    return np.array(psi2, dtype=np.complex128, copy=True), out2


def apply_A(sv: StateVector, *, check: bool = False, tol: float = 1e-6) -> StateVector:
    """Apply ``A`` to a state vector in its domain."""
    if check:
        _check_domain(sv, "D(A)", tol)
    o1, o2 = apply_A_arrays(sv.psi1, sv.psi2, sv.grid)
    return StateVector(o1, o2, sv.grid)


def apply_A0(sv: StateVector) -> StateVector:
    """``A0(psi1, psi2) = (0, (d2 + 1) psi1 + psi2)``."""
    out2 = d2(sv.psi1, sv.grid) + sv.psi1 + sv.psi2
    return StateVector(np.zeros_like(sv.psi1), out2, sv.grid)


@lru_cache(maxsize=32)
def interior_blocks(n: int, omega: float) -> tuple[np.ndarray, np.ndarray]:
    """Dense ``(d4, d2)`` restricted to interior nodes of a clamped grid."""
    h = omega / (n - 1)
    D4 = diff_matrix(n, h, 4, "clamped").toarray()[1:-1, 1:-1]
    D2 = diff_matrix(n, h, 2, "clamped").toarray()[1:-1, 1:-1]
    D4.setflags(write=False)
    D2.setflags(write=False)
    return D4, D2


def A_matrix(grid: AngularGrid) -> np.ndarray:
    """Dense matrix of ``A`` acting on the interior unknowns ``(psi1, psi2)``.

    The block layout is ``[psi1 interior, psi2 interior]``; boundary values are
    zero in ``D(A)``.
    """
    D4, D2 = interior_blocks(grid.n, grid.omega)
    m = grid.n - 2
    I = np.eye(m)
    top = np.hstack([np.zeros((m, m)), I])
    bot = np.hstack([-(D4 + 2.0 * D2 + I), -2.0 * D2 + 2.0 * I])
    return np.vstack([top, bot])


# ---------------------------------------------------------------------------
# temporal operators
# ---------------------------------------------------------------------------
def dt_matrix(tgrid: TemporalGrid, deriv: int) -> sp.csr_matrix:
    """Full-row temporal derivative (centered inside, one-sided at the ends)."""
    return diff_matrix(tgrid.n, tgrid.h, deriv, "free")


def _apply_along_t(M: sp.csr_matrix, values: np.ndarray) -> np.ndarray:
    vals = np.asarray(values)
    flat = vals.reshape(vals.shape[0], -1)
    return np.asarray(M @ flat).reshape(vals.shape)


def tail_norm(field_: SpaceTimeField) -> float:
    """``max |V(T)|`` relative to ``max |V|``."""
    scale = float(np.max(np.abs(field_.values)))
    if scale == 0.0:
        return 0.0
    return float(np.max(np.abs(field_.values[-1]))) / scale


def apply_L1(field_: SpaceTimeField, nu: float, *, check: bool = False,
             decay_tol: float = 1e-10) -> SpaceTimeField:
    """Evaluate ``(d_t - nu)^2 V = V'' - 2 nu V' + nu^2 V`` componentwise in theta.

    With ``check=True`` the ``D(L1)`` tags are enforced: ``V(0) = 0`` and the
    relative magnitude at ``T`` below ``decay_tol``.
    """
    if check:
        v0 = float(np.max(np.abs(field_.values[0])))
        if v0 > 0.0:
            raise DomainError(f"V(0) must vanish, found {v0:.3e}")
        tn = tail_norm(field_)
        if tn > decay_tol:
            raise DomainError(f"insufficient decay at T: tail norm {tn:.3e} > {decay_tol:.1e}")
    D1 = dt_matrix(field_.tgrid, 1)
    D2 = dt_matrix(field_.tgrid, 2)
    v = field_.values
    out = _apply_along_t(D2, v) - 2.0 * nu * _apply_along_t(D1, v) + nu * nu * v
    return field_.like(out)


def apply_B2(field_: SpaceTimeField, nu: float) -> SpaceTimeField:
    """``B2 V = (0, -2 (d_t - nu) V1)``."""
    D1 = dt_matrix(field_.tgrid, 1)
    v1 = field_.values[:, 0]
    out = np.zeros_like(field_.values)
    out[:, 1] = -2.0 * (_apply_along_t(D1, v1) - nu * v1)
    return field_.like(out)


def L1_dirichlet_matrix(tgrid: TemporalGrid, nu: float) -> sp.csr_matrix:
    """``(d_t - nu)^2`` on interior temporal nodes with ``V(0) = V(T) = 0``."""
    k = tgrid.n - 2
    h = tgrid.h
    lower = 1.0 / h**2 + nu / h
    diag = -2.0 / h**2 + nu * nu
    upper = 1.0 / h**2 - nu / h
    return sp.diags([np.full(k - 1, lower), np.full(k, diag), np.full(k - 1, upper)],
                    [-1, 0, 1], format="csr")


def Dt_dirichlet_matrix(tgrid: TemporalGrid) -> sp.csr_matrix:
    """Centered ``d_t`` on interior temporal nodes with zero end values."""
    k = tgrid.n - 2
    h = tgrid.h
    return sp.diags([np.full(k - 1, -0.5 / h), np.full(k - 1, 0.5 / h)], [-1, 1], format="csr")
