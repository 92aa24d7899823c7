from __future__ import annotations

import math

import numpy as np
import pytest

from conesolve import temporal as Tm
from conesolve.corpus import temporal_profiles
from conesolve.grid import TemporalGrid, dt_matrix


@pytest.mark.parametrize("lam", [16.0, 25.0 + 4.0j, 50.0 - 30.0j])
def test_exponential_example(lam):
    tg = TemporalGrid(30.0, 20001)
    R = np.exp(-tg.nodes)
    V = Tm.resolve_L1_array(lam, R, tg, 2.0)
    exact = Tm.exponential_example(lam, 2.0, tg.nodes)
    assert np.max(np.abs(V - exact)) < 1e-8


def test_second_order_in_h():
    errs = []
    for n in (501, 1001, 2001):
        tg = TemporalGrid(30.0, n)
        V = Tm.resolve_L1_array(20.0, np.exp(-tg.nodes), tg, 2.0)
        errs.append(np.max(np.abs(V - Tm.exponential_example(20.0, 2.0, tg.nodes))))
    assert math.log2(errs[0] / errs[1]) > 1.8
    assert math.log2(errs[1] / errs[2]) > 1.8


def test_initial_value_vanishes_and_equation_holds():
    tg = TemporalGrid(30.0, 4001)
    nu, lam = 2.0, 30.0 + 10.0j
    R = temporal_profiles(tg, 1, seed=2)[0]
    V = Tm.resolve_L1_array(lam, R, tg, nu)
    assert abs(V[0]) < 1e-14
    D1, D2 = dt_matrix(tg, 1), dt_matrix(tg, 2)
    L = D2 @ V - 2 * nu * (D1 @ V) + nu**2 * V - lam * V
    assert np.max(np.abs(L - R)[5:-5]) / np.max(np.abs(R)) < 1e-4


def test_batched_axes():
    tg = TemporalGrid(20.0, 401)
    R = np.stack(temporal_profiles(tg, 6, seed=1), axis=1).reshape(tg.n, 2, 3)
    V = Tm.resolve_L1_array(40.0, R, tg, 2.0)
    V0 = Tm.resolve_L1_array(40.0, R[:, 1, 2], tg, 2.0)
    assert np.allclose(V[:, 1, 2], V0, atol=1e-15)


def test_region_membership():
    assert Tm.in_sigma_nu(9.0 + 0.0j, 2.0)
    assert not Tm.in_sigma_nu(3.0, 2.0)
    assert Tm.in_sigma_nu(-100.0 + 1000.0j, 2.0)
    assert Tm.in_sigma_nu(-1e6, 0.5) is False
    assert Tm.margin(9.0, 2.0) == pytest.approx(1.0)
    reg = Tm.SpectralRegion(2.0, "Sigma_L1", 0.1)
    assert reg.radius == pytest.approx(16.0 / math.sin(0.1) ** 2)
    assert Tm.in_region(2000.0 + 0.0j, reg) and not Tm.in_region(1600.0 + 0.0j, reg)
    assert not Tm.in_region(100.0, reg)
    with pytest.raises(ValueError):
        Tm.SpectralRegion(2.0, "other")


def test_boundary_and_decay_errors():
    tg = TemporalGrid(10.0, 101)
    with pytest.raises(Tm.TemporalResolventError):
        Tm.resolve_L1_array(4.0, np.exp(-tg.nodes), tg, 2.0)
    with pytest.raises(Tm.TemporalResolventError):
        Tm.resolve_L1_array(25.0, np.ones(tg.n), tg, 2.0, decay_tol=1e-6)
    with pytest.raises(ValueError):
        Tm.exponential_example(9.0, 2.0, tg.nodes)


def test_sector_bound_at_large_modulus():
    tg = TemporalGrid(30.0, 8001)
    corpus = temporal_profiles(tg, 5, seed=0)
    rep = Tm.verify_L1_bound([2000.0 + 0.0j], corpus, tg, 2.0, 0.1)
    assert rep.passed
    rep = Tm.verify_L1_bound(Tm.sigma_L1_samples(2.0, 0.3, 10, seed=1), corpus, tg, 2.0, 0.3)
    assert rep.passed
    assert max(r / b for r, b in zip(rep.ratios, rep.bounds)) < 1.0


def test_resolvent_homogeneity():
    tg = TemporalGrid(20.0, 801)
    R = temporal_profiles(tg, 1, seed=5)[0]
    V = Tm.resolve_L1_array(30.0, R, tg, 2.0)
    W = Tm.resolve_L1_array(30.0, (2.0 - 1.0j) * R, tg, 2.0)
    assert np.allclose(W, (2.0 - 1.0j) * V, atol=1e-14)


def test_discrete_resolve_matches_continuous():
    tg = TemporalGrid(30.0, 3001)
    R = np.exp(-tg.nodes)
    V = Tm.discrete_L1_resolve(20.0, R[1:-1], tg, 2.0)
    exact = Tm.exponential_example(20.0, 2.0, tg.nodes)[1:-1]
    assert np.max(np.abs(V - exact)) < 1e-5
    ev = Tm.L1_discrete_spectrum(tg, 2.0)
    assert np.max(np.sqrt(ev.astype(complex)).real) <= 2.0 + 1e-9
