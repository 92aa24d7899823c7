"""Perturbed problem ``(L1 + L2) V + k rho^2 (P1 + P2) V = F`` and reconstruction of ``u``.

``P1 V = -e^{-2t} A0 V`` and ``P2 V = (0, 2 e^{-2t} (d_t - nu) V1)``.  The
equation is solved by a Neumann iteration on the right-hand side,

    W_0 = F,   W_{n+1} = F - k rho^2 (P1 + P2) S^{-1} W_n,   V = S^{-1} W_inf,

with ``S^{-1}`` the contour inverse of :mod:`conesolve.dpg`.  The iteration
contracts when ``k rho^2 ||(P1 + P2) S^{-1}|| < 1``, which is the quantitative
content of the smallness condition on ``rho``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.interpolate import CubicSpline

from .dpg import DPGInverter, _embed, _interior, coupled_matrix
from .grid import (AngularGrid, ProblemParams, SpaceTimeField, TemporalGrid, Dt_dirichlet_matrix,
                   apply_A_arrays, clamp_defect, d1, d2, dt_matrix, e_norm, interior_blocks,
                   lp_norm, x_norm)


class DivergenceError(RuntimeError):
    """The fixed-point iteration does not contract."""

    def __init__(self, message: str, trace: "IterationTrace"):
        super().__init__(message)
        self.trace = trace


# ---------------------------------------------------------------------------
# perturbation operators
# ---------------------------------------------------------------------------
def apply_P1(V: SpaceTimeField) -> SpaceTimeField:
    """``-e^{-2t} A0 V(t)`` with ``A0 (psi1, psi2) = (0, psi1'' + psi1 + psi2)``."""
    psi1 = V.values[:, 0]
    psi2 = V.values[:, 1]
    out = np.zeros_like(V.values)
    damp = np.exp(-2.0 * V.tgrid.nodes)[:, None]
    out[:, 1] = -damp * (d2(psi1, V.agrid) + psi1 + psi2)
    return V.like(out)


def apply_P2(V: SpaceTimeField, nu: float) -> SpaceTimeField:
    """``(0, 2 e^{-2t} (d_t - nu) V1)``."""
    D = dt_matrix(V.tgrid, 1)
    V1 = V.values[:, 0]
    dV1 = (D @ V1.reshape(V.tgrid.n, -1)).reshape(V1.shape)
    out = np.zeros_like(V.values)
    out[:, 1] = 2.0 * np.exp(-2.0 * V.tgrid.nodes)[:, None] * (dV1 - nu * V1)
    return V.like(out)


def perturbation_matrix(tgrid: TemporalGrid, agrid: AngularGrid, nu: float) -> sp.csr_matrix:
    """``P1 + P2`` on interior unknowns, ordered like :func:`conesolve.dpg.coupled_matrix`.

    On fields that vanish on the boundary of the grid it agrees with
    :func:`apply_P1` + :func:`apply_P2` at interior nodes.
    """
    _, D2 = interior_blocks(agrid.n, agrid.omega)
    m = agrid.n - 2
    I = sp.identity(m, format="csr")
    Z = sp.csr_matrix((m, m))
    D2 = sp.csr_matrix(D2)
    t = tgrid.nodes[1:-1]
    E = sp.diags(np.exp(-2.0 * t))
    a0 = sp.bmat([[Z, Z], [D2 + I, I]])
    b2 = sp.bmat([[Z, Z], [I, Z]])
    k = tgrid.n - 2
    P1 = -sp.kron(E, a0)
    dt = Dt_dirichlet_matrix(tgrid) - nu * sp.identity(k)
    P2 = 2.0 * sp.kron(E @ dt, b2)
    return (P1 + P2).astype(np.complex128).tocsr()


def apply_P_interior(V: SpaceTimeField, nu: float, P: sp.csr_matrix | None = None) -> SpaceTimeField:
    """``(P1 + P2) V`` through the interior matrix; boundary values of the result are 0."""
    if P is None:
        P = perturbation_matrix(V.tgrid, V.agrid, nu)
    out = P @ _interior(V.values).ravel()
    return V.like(_embed(out.reshape(V.tgrid.n - 2, -1), V.tgrid, V.agrid))


def full_operator(V: SpaceTimeField, params: ProblemParams) -> SpaceTimeField:
    """Discrete ``(L1 - A) V + k rho^2 (P1 + P2) V`` on interior unknowns."""
    nu = params.nu
    M = coupled_matrix(V.tgrid, V.agrid, nu)
    P = perturbation_matrix(V.tgrid, V.agrid, nu)
    out = (M + params.k * params.rho**2 * P) @ _interior(V.values).ravel()
    return V.like(_embed(out.reshape(V.tgrid.n - 2, -1), V.tgrid, V.agrid))


# ---------------------------------------------------------------------------
# fixed-point solve
# ---------------------------------------------------------------------------
@dataclass
class IterationTrace:
    increments: list = field(default_factory=list)
    ratios: list = field(default_factory=list)
    converged: bool = False

    @property
    def iterations(self) -> int:
        return len(self.increments)

    @property
    def max_ratio(self) -> float:
        tail = self.ratios[1:] if len(self.ratios) > 1 else self.ratios
        return float(max(tail)) if tail else 0.0

    def as_dict(self) -> dict:
        return {"iterations": self.iterations, "increments": [float(x) for x in self.increments],
                "ratios": [float(x) for x in self.ratios], "converged": self.converged,
                "max_ratio": self.max_ratio}


@dataclass
class FullSolution:
    V: SpaceTimeField
    trace: IterationTrace
    residual: float
    iterates: list = field(default_factory=list)


def solve_full(F: SpaceTimeField, params: ProblemParams, inverter: DPGInverter, *,
               fp_tol: float = 1e-8, max_iter: int = 100, p: float | None = None,
               keep_iterates: bool = False) -> FullSolution:
    """Neumann iteration on the right-hand side.

    Raises
    ------
    DivergenceError
        When the increment ratio stays ``>= 1`` over five consecutive steps or
        ``max_iter`` is reached.
    """
    p = params.p if p is None else p
    nu = params.nu
    kr2 = params.k * params.rho**2
    scale = e_norm(F, p)
    trace = IterationTrace()
    if scale == 0.0:
        trace.converged = True
        return FullSolution(F.like(np.zeros_like(F.values)), trace, 0.0)
    if kr2 == 0.0:
        V = inverter.apply(F)
        trace.converged = True
        return FullSolution(V, trace, _residual(V, F, params, p))
    P = perturbation_matrix(F.tgrid, F.agrid, nu)
    W = F
    iterates = []
    bad = 0
    prev = None
    for _ in range(max_iter):
        V = inverter.apply(W)
        if keep_iterates:
            iterates.append(V)
        W_new = F - apply_P_interior(V, nu, P) * kr2
        inc = e_norm(W_new - W, p) / scale
        trace.increments.append(inc)
        if prev is not None and prev > 0:
            ratio = inc / prev
            trace.ratios.append(ratio)
            bad = bad + 1 if ratio >= 1.0 else 0
            if bad >= 5 or not np.isfinite(inc):
                raise DivergenceError("rho exceeds contraction threshold", trace)
        prev = inc
        W = W_new
        if inc <= fp_tol:
            trace.converged = True
            break
    else:
        raise DivergenceError(f"max_iter = {max_iter} exceeded", trace)
    V = inverter.apply(W)
    if keep_iterates:
        iterates.append(V)
    return FullSolution(V, trace, _residual(V, F, params, p), iterates)


def _residual(V: SpaceTimeField, F: SpaceTimeField, params: ProblemParams, p: float) -> float:
    r = full_operator(V, params) - F.like(_embed(_interior(F.values), F.tgrid, F.agrid))
    den = e_norm(F, p)
    return float(e_norm(r, p) / den) if den else 0.0


def contraction_ratio(inverter: DPGInverter, corpus: list[SpaceTimeField], nu: float, p: float, *,
                      power_steps: int = 10) -> float:
    """Corpus maximum of ``||(P1 + P2) S^{-1} G|| / ||G||``.

    Each corpus member ``F`` is followed by ``power_steps`` power iterates
    ``G <- (P1 + P2) S^{-1} G``, and every iterate joins the probe set.  Smooth
    probes alone miss the dominant mode of the map, which is the one that
    governs the Neumann iteration.
    """
    P = None
    q = 0.0
    for F in corpus:
        if P is None:
            P = perturbation_matrix(F.tgrid, F.agrid, nu)
        G = F
        for _ in range(power_steps + 1):
            nG = e_norm(G, p)
            if nG == 0.0:
                break
            H = apply_P_interior(inverter.apply(G), nu, P)
            q = max(q, e_norm(H, p) / nG)
            G = H * (1.0 / e_norm(H, p)) if e_norm(H, p) > 0 else H
    return q


def rho0_from_ratio(k: float, q1: float, safety: float = 0.5) -> float:
    """``sqrt(safety / (k q1))``; infinite when ``k q1 = 0``."""
    if k * q1 <= 0.0:
        return math.inf
    return math.sqrt(safety / (k * q1))


def estimate_rho0(k: float, params: ProblemParams, inverter: DPGInverter,
                  probe_corpus: list[SpaceTimeField], *, safety: float = 0.5,
                  p: float | None = None, power_steps: int = 10) -> tuple[float, float]:
    """Return ``(rho0, q1)`` from the empirical norm of ``(P1 + P2) S^{-1}``."""
    p = params.p if p is None else p
    q1 = contraction_ratio(inverter, probe_corpus, params.nu, p, power_steps=power_steps)
    return rho0_from_ratio(k, q1, safety), q1


def manufactured_rhs(Vstar: SpaceTimeField, params: ProblemParams) -> SpaceTimeField:
    """``F := (L1_h - A_h) V* + k rho^2 (P1 + P2)_h V*``."""
    return full_operator(Vstar, params)


# ---------------------------------------------------------------------------
# regularity
# ---------------------------------------------------------------------------
@dataclass
class RegularityReport:
    norm_F: float
    norm_Vtt: float
    norm_AV: float
    norm_V: float
    trace_t0: float
    clamp: float
    tail: float
    C: float
    passed: bool
    details: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        d = {}
        for k, v in self.__dict__.items():
            if k == "details":
                continue
            d[k] = bool(v) if isinstance(v, (bool, np.bool_)) else float(v)
        d.update(self.details)
        return d


def classical_regularity_check(V: SpaceTimeField, F: SpaceTimeField, params: ProblemParams, *,
                               p: float | None = None, C_max: float = 1e4, tol: float = 1e-10,
                               clamp_tol: float = 1e-2, decay_tol: float = 1e-6) -> RegularityReport:
    """Finite ``||V''||`` and ``||A V||`` bounded by ``C ||F||`` plus boundary traces.

    ``V(0) = 0`` is checked to ``tol`` relative to ``max |V|``.  The clamped
    defect of :func:`conesolve.grid.clamp_defect` (edge values and
    ``h``-scaled one-sided slopes) is a discretization quantity and is checked
    against ``clamp_tol``.  The value at ``T`` must be below ``decay_tol``
    times ``max |V|``.
    """
    p = params.p if p is None else p
    tg, ag = V.tgrid, V.agrid
    D2t = dt_matrix(tg, 2)
    Vtt = (D2t @ V.values.reshape(tg.n, -1)).reshape(V.values.shape)
    a1, a2 = apply_A_arrays(V.values[:, 0], V.values[:, 1], ag)
    AV = np.stack([a1, a2], axis=1)
    nF = e_norm(F, p)
    nVtt = e_norm(Vtt, p, tg, ag)
    nAV = e_norm(AV, p, tg, ag)
    nV = e_norm(V, p)
    vmax = float(np.max(np.abs(V.values))) or 1.0
    t0 = float(np.max(np.abs(V.values[0]))) / vmax
    clamp = _field_clamp_defect(V)
    tail = float(np.max(np.abs(V.values[-1]))) / vmax
    if nF > 0:
        C = max(nVtt, nAV) / nF
    else:
        C = 0.0 if max(nVtt, nAV) == 0 else math.inf
    finite = all(np.isfinite(x) for x in (nVtt, nAV, nV))
    passed = bool(finite and C <= C_max and t0 <= tol and clamp <= clamp_tol and tail <= decay_tol)
    return RegularityReport(nF, nVtt, nAV, nV, t0, clamp, tail, C, passed)


def _field_clamp_defect(V: SpaceTimeField) -> float:
    """Largest clamped-trace defect over time slices and both components."""
    worst = 0.0
    for row in V.values:
        for comp in row:
            if np.any(comp != 0):
                worst = max(worst, clamp_defect(comp, V.agrid))
    return worst


def membership_norms(V: SpaceTimeField, p: float) -> dict:
    """``W^{1,p}``-in-time norm and ``L^p``-in-time norm of ``d_theta^3 V1``."""
    tg, ag = V.tgrid, V.agrid
    D1t = dt_matrix(tg, 1)
    Vt = (D1t @ V.values.reshape(tg.n, -1)).reshape(V.values.shape)
    w1p = e_norm(V, p) + e_norm(Vt, p, tg, ag)
    d3 = d1(d2(V.values[:, 0], ag), ag)
    third = float(lp_norm(lp_norm(d3, ag.h, p), tg.h, p))
    return {"w1p_t": float(w1p), "theta3": third}


# ---------------------------------------------------------------------------
# reconstruction on the sector
# ---------------------------------------------------------------------------
@dataclass
class SectorField:
    r: np.ndarray
    theta: np.ndarray
    u: np.ndarray  # (n_r, n_theta)
    trace_value: float
    trace_normal: float

    def rows(self) -> np.ndarray:
        R, TH = np.meshgrid(self.r, self.theta, indexing="ij")
        return np.column_stack([R.ravel(), TH.ravel(), self.u.ravel()])


def _check_radii(r: np.ndarray, rho: float, T: float) -> None:
    lo = rho * math.exp(-T)
    if np.any(r < lo * (1 - 1e-12)) or np.any(r > rho * (1 + 1e-12)):
        raise ValueError(f"radius outside the resolved annulus [{lo:.6g}, {rho:.6g}]")


def reconstruct_u(V: SpaceTimeField, params: ProblemParams, radii) -> SectorField:
    """``u(r, theta) = r e^{-nu t} V1(t, theta)`` with ``t = ln(rho / r)``.

    ``V1`` is interpolated in ``t`` by a cubic spline; ``theta`` stays on the
    angular grid.  The edge values of ``u`` are reported relative to
    ``max |u|`` and the edge values of ``(1/r) du/dtheta`` relative to its
    maximum over the sector.
    """
    r = np.asarray(radii, dtype=float)
    tg, ag = V.tgrid, V.agrid
    _check_radii(r, params.rho, tg.T)
    t = np.clip(np.log(params.rho / r), 0.0, tg.T)
    V1 = V.values[:, 0]
    spline = CubicSpline(tg.nodes, V1.real, axis=0)
    vals = spline(t)
    if np.any(V1.imag != 0):
        vals = vals + 1j * CubicSpline(tg.nodes, V1.imag, axis=0)(t)
    u = (r * np.exp(-params.nu * t))[:, None] * vals
    scale = float(np.max(np.abs(u))) or 1.0
    tv = float(max(np.max(np.abs(u[:, 0])), np.max(np.abs(u[:, -1])))) / scale
    du = d1(u, ag, "free") / r[:, None]
    slope = float(np.max(np.abs(du))) or 1.0
    tn = float(max(np.max(np.abs(du[:, 0])), np.max(np.abs(du[:, -1])))) / slope
    return SectorField(r, ag.nodes.copy(), u, tv, tn)


def extract_V1(sf: SectorField, params: ProblemParams, tgrid: TemporalGrid) -> np.ndarray:
    """Inverse of :func:`reconstruct_u`: ``V1(t) = e^{nu t} u(rho e^{-t}) / (rho e^{-t})``.

    The samples are re-interpolated in ``t = ln(rho / r)`` onto ``tgrid``.
    """
    t = np.log(params.rho / sf.r)
    order = np.argsort(t)
    t = t[order]
    vals = (np.exp(params.nu * t) / (params.rho * np.exp(-t)))[:, None] * sf.u[order]
    if vals.dtype.kind == "c":
        out = CubicSpline(t, vals.real, axis=0)(tgrid.nodes) + 1j * CubicSpline(t, vals.imag, axis=0)(tgrid.nodes)
    else:
        out = CubicSpline(t, vals, axis=0)(tgrid.nodes)
    return out


def x_norms_in_time(V: SpaceTimeField, p: float) -> np.ndarray:
    return x_norm(V.values, p, V.agrid)


__all__ = [
    "DivergenceError", "FullSolution", "IterationTrace", "RegularityReport", "SectorField",
    "apply_P1", "apply_P2", "apply_P_interior", "classical_regularity_check", "contraction_ratio",
    "estimate_rho0", "extract_V1", "full_operator", "manufactured_rhs", "membership_norms",
    "perturbation_matrix", "reconstruct_u", "rho0_from_ratio", "solve_full",
]
