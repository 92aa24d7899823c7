from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conesolve import angular as An
from conesolve.corpus import angular_corpus, angular_state
from conesolve.grid import AngularGrid, StateVector, apply_A_arrays
from conesolve.roots import eigenvalues


def _rel(a, b):
    return float(np.max(np.abs(a - b)) / np.max(np.abs(b)))


@pytest.mark.parametrize("lam", [-1.0, -10.0, -250.0, -5.0 + 3.0j])
def test_kernel_matches_fd_oracle(lam):
    errs = []
    for n in (65, 129):
        F = angular_state(AngularGrid(math.pi / 2, n), seed=3)
        k = An.resolve_A(lam, F)
        f = An.fd_resolve_A(lam, F)
        errs.append(_rel(k.psi1, f.psi1))
    assert errs[1] < 5e-3
    assert errs[1] < errs[0]


def test_resolvent_solves_the_equation():
    # the discrete A applied to the kernel solution leaves an O(h^2) residual
    lam = -7.0 + 2.0j
    res = []
    for n in (129, 257, 513):
        g = AngularGrid(math.pi / 2, n)
        F = angular_state(g, seed=1)
        psi = An.resolve_A(lam, F)
        a1, a2 = apply_A_arrays(psi.psi1, psi.psi2, g)
        assert np.max(np.abs(a1 - lam * psi.psi1 - F.psi1)) < 1e-12
        assert abs(psi.psi1[0]) < 1e-10 and abs(psi.psi1[-1]) < 1e-10
        r2 = a2 - lam * psi.psi2 - F.psi2
        res.append(float(np.max(np.abs(r2[n // 4: 3 * n // 4]))))
    assert math.log2(res[0] / res[1]) > 1.8
    assert math.log2(res[1] / res[2]) > 1.8


def test_rejected_parameters():
    F = angular_state(AngularGrid(math.pi / 2, 33))
    with pytest.raises(An.BranchCutError):
        An.resolve_A(4.0, F)
    with pytest.raises(An.ResolventError):
        An.resolve_A(0.0, F)
    with pytest.raises(ValueError):
        An.resolve_A(-1.0, F, variant="other")


def test_near_eigenvalue_detected():
    lam = min(eigenvalues(math.pi / 2), key=abs)
    F = angular_state(AngularGrid(math.pi / 2, 65))
    with pytest.raises(An.NearEigenvalueError):
        An.resolve_A(lam, F, spectral_margin=1e-6)


def test_lambda_zero_solve():
    g = AngularGrid(math.pi / 2, 129)
    F = angular_state(g, seed=2)
    psi = An.solve_A_at_zero(F)
    assert np.array_equal(psi.psi2, F.psi1)
    a1, a2 = apply_A_arrays(psi.psi1, psi.psi2, g)
    assert np.max(np.abs(a2 - F.psi2)[8:-8]) / np.max(np.abs(F.psi2)) < 1e-2


@settings(max_examples=15, deadline=None)
@given(st.floats(-3.0, 3.0), st.floats(0.5, 200.0))
def test_resolvent_is_linear(a, mag):
    g = AngularGrid(math.pi / 2, 33)
    c = angular_corpus(g, 2, seed=5)
    F = StateVector(c[0, 0], c[0, 1], g)
    G = StateVector(c[1, 0], c[1, 1], g)
    lam = -mag
    lhs = An.resolve_A(lam, F + G * a)
    rhs = An.resolve_A(lam, F) + An.resolve_A(lam, G) * a
    scale = max(np.max(np.abs(lhs.psi1)), 1e-300)
    assert np.max(np.abs(lhs.psi1 - rhs.psi1)) / scale < 1e-10


def test_resolvent_decay_on_negative_axis():
    g = AngularGrid(math.pi / 2, 65)
    corpus = angular_corpus(g, 5, seed=0)
    lams = -np.logspace(0, 4, 9)
    rep = An.verify_resolvent_bound(lams, corpus, g, 2.0)
    assert rep.passed
    assert abs(rep.tail_slope + 1.0) < 0.15
    assert np.all(np.isfinite(rep.scaled))


@pytest.mark.parametrize("lam", [-10.0, -100.0, -1000.0])
def test_lemma_inequalities(lam):
    F = angular_state(AngularGrid(math.pi / 2, 257), seed=4)
    ineqs = An.verify_lemma_bounds(lam, F, 2.0, eps0=4.378794)
    assert len(ineqs) == 9
    for q in ineqs:
        assert q.holds, q.as_dict()


def test_lemma_bounds_require_far_lambda():
    F = angular_state(AngularGrid(math.pi / 2, 33))
    with pytest.raises(ValueError):
        An.verify_lemma_bounds(-1.0, F, 2.0, eps0=4.0)


@pytest.mark.parametrize("alpha", [3.0 + 1.0j, 10.0 - 1.0j, 40.0 + 1.0j])
def test_kernel_identity(alpha):
    assert An.lemma_identity_residual(alpha, math.pi / 2) < 1e-8


def test_sine_and_omega_variants_differ():
    g = AngularGrid(math.pi / 2, 65)
    F = angular_state(g, seed=1)
    a = An.resolve_A(-3.0, F, variant="sine")
    b = An.resolve_A(-3.0, F, variant="omega")
    fd = An.fd_resolve_A(-3.0, F)
    # only the sine variant reproduces the boundary-value solution
    assert _rel(a.psi1, fd.psi1) < 1e-2
    assert _rel(b.psi1, fd.psi1) > 10 * _rel(a.psi1, fd.psi1)
