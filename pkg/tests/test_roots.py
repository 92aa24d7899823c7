from __future__ import annotations

import math

import numpy as np
import pytest

from conesolve import roots as R

# frozen from mpmath.findroot on sinh z -+ z at 30 digits, truncated to double
PLUS_FIRST = 2.250728611601860 + 4.212392230490661j
MINUS_FIRST = 2.768678282987322 + 7.497676277776385j


def test_tau_reproduces_reference():
    assert R.compute_tau() == pytest.approx(4.21239, abs=1e-3)
    assert R.compute_tau() == pytest.approx(PLUS_FIRST.imag, abs=1e-10)


def test_first_roots_frozen():
    plus = R.find_roots("plus", (0.1, 30, 0, 30)).roots
    minus = R.find_roots("minus", (0.1, 30, 0, 30)).roots
    assert abs(plus[0].value - PLUS_FIRST) < 1e-9
    assert abs(minus[0].value - MINUS_FIRST) < 1e-9
    # the lowest imaginary part sits on the "plus" family, not on "minus"
    assert min(abs(r.value.imag) for r in minus) > 7.0


def test_empty_box_near_origin():
    assert len(R.find_roots("minus", (0.1, 0.5, 0.0, 0.5))) == 0
    assert R.count_roots("minus", (0.1, 0.5, 0.0, 0.5)).count == 0


def test_singleton_tau():
    r = R.TranscendentalRoot(1 + 5j, "minus", 1, 0.0, math.pi / 2)
    assert R.tau([r]) == 5.0
    with pytest.raises(R.RootError):
        R.tau([])


def test_residuals_and_conjugates():
    for fam in R.FAMILIES:
        for r in R.find_roots(fam, omega=math.pi / 2).roots:
            assert r.residual < 1e-10
            assert r.value.real > 0
            assert abs(R.determinant(fam, r.conjugate, math.pi / 2)) < 1e-8


def test_count_matches_find_on_random_boxes():
    rng = np.random.default_rng(7)
    for _ in range(20):
        x0, y0 = rng.uniform(0.1, 5), rng.uniform(0, 10)
        box = (x0, x0 + rng.uniform(1, 6), y0, y0 + rng.uniform(2, 12))
        fam = R.UNIT_FAMILIES[int(rng.integers(0, 2))]
        try:
            res = R.find_roots(fam, box)
        except R.RootError:
            continue  # a root grazes the box edge; perturbing the box is the documented remedy
        assert len(res.roots) == res.count


def test_count_additivity():
    full = R.count_roots("minus", (0.1, 20, 0.05, 20)).count
    lo = R.count_roots("minus", (0.1, 20, 0.05, 10.3)).count
    hi = R.count_roots("minus", (0.1, 20, 10.3, 20)).count
    assert full == lo + hi


def test_tau_stable_under_larger_box():
    a = R.tau([r for f in R.UNIT_FAMILIES for r in R.find_roots(f, (0.1, 30, 0, 30)).roots])
    b = R.tau([r for f in R.UNIT_FAMILIES for r in R.find_roots(f, (0.1, 60, 0, 60)).roots])
    assert a == pytest.approx(b, abs=1e-12)


def test_eigenvalue_relations():
    om = math.pi / 2
    for r in R.find_roots("minus", omega=om).roots:
        assert np.sqrt(r.eigenvalue).real == pytest.approx(abs(r.value.imag) / om, rel=1e-12)
        r2 = R.TranscendentalRoot(r.value, r.family, r.index, r.residual, 2 * om)
        assert r2.eigenvalue == pytest.approx(r.eigenvalue / 4)


def test_separation_examples():
    s = R.check_separation(math.pi / 2, 2.0)
    assert s.ok and s.margin == pytest.approx(4.21239 - math.pi, abs=1e-4)
    assert not R.check_separation(2 * math.pi, 3.0).ok
    t = R.compute_tau()
    assert not R.check_separation(1.0, t, t).ok


def test_sine_eigenvalues_and_eps0():
    eigs = R.eigenvalues(math.pi / 2)
    low = min(eigs, key=abs)
    assert abs(low.real - 6.2531558) < 1e-6 and abs(abs(low.imag) - 6.1313444) < 1e-6
    assert R.min_re_sqrt(eigs) == pytest.approx(2.7395933, abs=1e-6)
    assert R.estimate_eps0(math.pi / 2) == pytest.approx(4.378794, abs=1e-5)


def test_wide_angles_have_real_eigenvalues():
    eigs = R.eigenvalues(2 * math.pi)
    real = [e for e in eigs if abs(e.imag) < 1e-12 and e.real > 0]
    assert real, "the sine determinant has imaginary-axis roots for omega >= pi"
    # so omega nu < tau alone does not keep the spectra apart at this angle
    assert R.min_re_sqrt(eigs) < 3.0 - 2.0 / 1.5
