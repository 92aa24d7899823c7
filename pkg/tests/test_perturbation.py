from __future__ import annotations

import math

import numpy as np
import pytest

from conesolve import perturbation as Pt
from conesolve.corpus import field_corpus
from conesolve.dpg import _embed, _interior, relative_discrepancy
from conesolve.grid import AngularGrid, SpaceTimeField, TemporalGrid, e_norm


def _vanishing(tg, ag, seed=0):
    V = field_corpus(tg, ag, 1, seed=seed, vanish_at_ends=True)[0]
    return V.like(_embed(_interior(V.values), tg, ag))


def test_P1_on_separable_example():
    tg, ag = TemporalGrid(5.0, 51), AngularGrid(math.pi / 2, 65)
    th, t = ag.nodes, tg.nodes
    k = math.pi / ag.omega
    phi = np.sin(k * th)  # phi'' = -k^2 phi away from the stencil closure
    vals = np.zeros((tg.n, 2, ag.n))
    vals[:, 0] = np.exp(-t)[:, None] * phi
    vals[:, 1] = 3.0 * np.exp(-t)[:, None] * phi
    out = Pt.apply_P1(SpaceTimeField(vals, tg, ag)).values
    exact = -np.exp(-3.0 * t)[:, None] * (1.0 - k * k + 3.0) * phi
    assert np.all(out[:, 0] == 0)
    assert np.max(np.abs(out[:, 1] - exact)[:, 4:-4]) < 1e-3


def test_P2_on_separable_example():
    tg, ag = TemporalGrid(5.0, 2001), AngularGrid(1.0, 9)
    t = tg.nodes
    vals = np.zeros((tg.n, 2, ag.n))
    vals[:, 0] = (t * np.exp(-t))[:, None]
    out = Pt.apply_P2(SpaceTimeField(vals, tg, ag), 2.0).values[:, 1, 3]
    exact = 2.0 * np.exp(-2.0 * t) * ((1 - t) * np.exp(-t) - 2.0 * t * np.exp(-t))
    assert np.max(np.abs(out - exact)) < 5e-5  # one-sided O(h^2) at t = 0


def test_interior_matrix_matches_operators():
    tg, ag = TemporalGrid(10.0, 41), AngularGrid(math.pi / 2, 33)
    V = _vanishing(tg, ag, 3)
    ref = Pt.apply_P1(V) + Pt.apply_P2(V, 2.0)
    got = Pt.apply_P_interior(V, 2.0)
    inner = (slice(1, -1), slice(None), slice(3, -3))
    # the Dirichlet time matrix and the free one-sided stencil agree at interior rows
    assert np.allclose(got.values[inner], ref.values[inner], atol=1e-10)


def test_k_zero_reduces_to_contour_inverse(desk):
    F = field_corpus(desk.tgrid, desk.agrid, 1, seed=1)[0]
    sol = Pt.solve_full(F, desk.params.replace(k=0.0), desk.inverter)
    assert sol.trace.converged and sol.trace.iterations == 0
    assert relative_discrepancy(sol.V, desk.inverter.apply(F)) == 0.0


def test_zero_rhs(desk):
    F = SpaceTimeField.zeros(desk.tgrid, desk.agrid)
    sol = Pt.solve_full(F, desk.params.replace(rho=2.0), desk.inverter)
    assert np.all(sol.V.values == 0) and sol.residual == 0.0


def test_manufactured_recovery(desk):
    Vs = _vanishing(desk.tgrid, desk.agrid, 5)
    params = desk.params.replace(rho=2.0)
    F = Pt.manufactured_rhs(Vs, params)
    sol = Pt.solve_full(F, params, desk.inverter)
    assert sol.trace.converged
    assert relative_discrepancy(sol.V, Vs) < 1e-4
    assert sol.residual < 1e-5
    assert sol.trace.max_ratio < 1.0


def test_divergence_reported(desk):
    F = field_corpus(desk.tgrid, desk.agrid, 1, seed=2)[0]
    with pytest.raises(Pt.DivergenceError) as info:
        Pt.solve_full(F, desk.params.replace(rho=20.0), desk.inverter)
    assert len(info.value.trace.ratios) >= 5


def test_rho0_scaling():
    assert Pt.rho0_from_ratio(1.0, 0.02) == pytest.approx(5.0)
    assert Pt.rho0_from_ratio(4.0, 0.02) == pytest.approx(2.5)
    assert Pt.rho0_from_ratio(0.0, 0.02) == math.inf


def test_power_iterates_raise_the_estimate(desk):
    probes = field_corpus(desk.tgrid, desk.agrid, 2, seed=0)
    smooth = Pt.contraction_ratio(desk.inverter, probes, desk.params.nu, 2.0, power_steps=0)
    power = Pt.contraction_ratio(desk.inverter, probes, desk.params.nu, 2.0, power_steps=10)
    assert power >= smooth


def test_regularity_of_solution(desk):
    F = field_corpus(desk.tgrid, desk.agrid, 1, seed=0)[0]
    V = desk.inverter.apply(F)
    rep = Pt.classical_regularity_check(V, F, desk.params)
    assert rep.passed, rep.as_dict()
    assert isinstance(rep.as_dict()["passed"], bool)
    bad = V.like(V.values + 1.0)
    assert not Pt.classical_regularity_check(bad, F, desk.params).passed


def test_reconstruction_round_trip(desk):
    V = _vanishing(desk.tgrid, desk.agrid, 1)
    params = desk.params.replace(rho=2.0)
    r = params.rho * np.exp(-np.linspace(0.0, desk.tgrid.T, 400))
    sf = Pt.reconstruct_u(V, params, r)
    assert sf.u.shape == (400, desk.agrid.n)
    assert sf.trace_value < 1e-12
    back = Pt.extract_V1(sf, params, desk.tgrid)
    err = np.max(np.abs(back - V.values[:, 0])) / np.max(np.abs(V.values[:, 0]))
    assert err < 1e-2
    with pytest.raises(ValueError):
        Pt.reconstruct_u(V, params, [3.0])


def test_reconstruction_trace_converges():
    vals = []
    for n in (33, 65):
        tg, ag = TemporalGrid(10.0, 65), AngularGrid(math.pi / 2, n)
        V = _vanishing(tg, ag, 0)
        from conesolve.grid import ProblemParams
        sf = Pt.reconstruct_u(V, ProblemParams(rho=1.0), np.exp(-np.linspace(0, 10, 50)))
        vals.append(sf.trace_normal)
    assert vals[1] < vals[0]


def test_membership_norms_finite(desk):
    V = desk.inverter.apply(field_corpus(desk.tgrid, desk.agrid, 1)[0])
    m = Pt.membership_norms(V, 2.0)
    assert all(np.isfinite(v) and v > 0 for v in m.values())
