from __future__ import annotations

import math

import numpy as np
import pytest

from conesolve import dpg
from conesolve.corpus import field_corpus
from conesolve.grid import AngularGrid, ProblemParams, SpaceTimeField, TemporalGrid
from conesolve.roots import eigenvalues


def test_contour_geometry(desk):
    c = desk.contour
    assert c.nu_prime == pytest.approx(2.369797, abs=1e-5)
    assert np.allclose(np.sqrt(c.z).real, c.nu_prime)
    assert np.allclose(c.s, -c.s[::-1])  # symmetric, so conjugate nodes pair up
    assert c.n_nodes == 200 and c.refined(2).n_nodes == 400
    assert c.eig_distance > 1e-2


def test_contour_rejects_bad_geometry():
    eigs = eigenvalues(math.pi / 2)
    with pytest.raises(dpg.ContourError):
        dpg.build_contour(ProblemParams(p=100.0), eigs)  # nu = 2.98 > min Re sqrt = 2.74
    with pytest.raises(dpg.ContourError):
        dpg.build_contour(ProblemParams(), eigs, nu_prime=1.5)
    with pytest.raises(dpg.ContourError):
        dpg.build_contour(ProblemParams(), [])


def test_discrete_spectra_separated(desk):
    assert dpg.discrete_separation(desk.contour, desk.agrid, desk.tgrid).ok


def test_zero_field(desk):
    F = SpaceTimeField.zeros(desk.tgrid, desk.agrid)
    assert np.all(desk.inverter.apply(F).values == 0)


def test_linearity_and_real_output(desk):
    F, G = field_corpus(desk.tgrid, desk.agrid, 2, seed=9)
    inv = desk.inverter
    V = inv.apply(F + G * 2.5)
    W = inv.apply(F) + inv.apply(G) * 2.5
    assert dpg.relative_discrepancy(V, W) < 1e-12
    assert np.all(V.values.imag == 0)


def test_conjugation_symmetry(desk):
    F = field_corpus(desk.tgrid, desk.agrid, 1, seed=4)[0]
    Fc = F.like(F.values * (1.0 + 2.0j))
    V = desk.inverter.apply(Fc)
    Vr = desk.inverter.apply(F)
    assert np.allclose(V.values, Vr.values * (1.0 + 2.0j), atol=1e-12)


def test_matches_direct_solve(desk):
    for F in field_corpus(desk.tgrid, desk.agrid, 3, seed=1):
        V = desk.inverter.apply(F)
        W = dpg.direct_sum_solve(F, desk.params.nu)
        assert dpg.relative_discrepancy(V, W) < 1e-3
        assert dpg.coupled_residual(W, F, desk.params.nu) < 1e-10


def test_quadrature_refinement_converges(desk):
    F = field_corpus(desk.tgrid, desk.agrid, 1, seed=2)[0]
    W = dpg.direct_sum_solve(F, desk.params.nu)
    c50 = dpg.build_contour(desk.params, eigenvalues(desk.params.omega), 50)
    coarse = dpg.DPGInverter(c50, desk.tgrid, desk.agrid).apply(F)
    fine = desk.inverter.apply(F)
    assert dpg.relative_discrepancy(fine, W) < dpg.relative_discrepancy(coarse, W)


def test_manufactured_solution_recovered(desk):
    Vs = field_corpus(desk.tgrid, desk.agrid, 1, seed=6, vanish_at_ends=True)[0]
    M = dpg.coupled_matrix(desk.tgrid, desk.agrid, desk.params.nu)
    rhs = M @ dpg._interior(Vs.values).ravel()
    F = Vs.like(dpg._embed(rhs.reshape(desk.tgrid.n - 2, -1), desk.tgrid, desk.agrid))
    V = desk.inverter.apply(F)
    Vs_in = Vs.like(dpg._embed(dpg._interior(Vs.values), desk.tgrid, desk.agrid))
    assert dpg.relative_discrepancy(V, Vs_in) < 1e-3


def test_formula_backend_is_second_order():
    params = ProblemParams()
    eigs = eigenvalues(params.omega)
    c = dpg.build_contour(params, eigs, 120)
    errs = []
    for n_th, n_t in ((17, 33), (33, 65)):
        tg, ag = TemporalGrid(20.0, n_t), AngularGrid(params.omega, n_th)
        F = field_corpus(tg, ag, 1, seed=0)[0]
        V = dpg.DPGInverter(c, tg, ag, "formula").apply(F)
        W = dpg.direct_sum_solve(F, params.nu)
        errs.append(dpg.relative_discrepancy(V, W))
    assert errs[1] < errs[0] / 2.5


def test_direct_solver_budget():
    tg, ag = TemporalGrid(10.0, 33), AngularGrid(math.pi / 2, 17)
    F = field_corpus(tg, ag, 1)[0]
    with pytest.raises(dpg.SolverError):
        dpg.direct_sum_solve(F, 2.0, max_unknowns=10)


def test_pairwise_sum_is_deterministic():
    rng = np.random.default_rng(0)
    items = [rng.normal(size=4) for _ in range(7)]
    assert np.array_equal(dpg.pairwise_sum(list(items)), dpg.pairwise_sum(list(items)))
    assert np.allclose(dpg.pairwise_sum(items), np.sum(items, axis=0))
    with pytest.raises(ValueError):
        dpg.pairwise_sum([])


def test_contour_dump_shape(desk):
    F = field_corpus(desk.tgrid, desk.agrid, 1)[0]
    small = dpg.build_contour(desk.params, eigenvalues(desk.params.omega), 20)
    rows = dpg.contour_dump(F, small)
    assert rows.shape == (20, 4)
    assert np.all(rows[:, 3] >= 0)
    # integrand peaks near the vertex of the parabola
    assert abs(rows[np.argmax(rows[:, 3]), 0]) < 50
