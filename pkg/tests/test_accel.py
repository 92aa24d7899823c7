from __future__ import annotations

import os
import subprocess
import sys

import numpy as np
import pytest

from conesolve import _accel


def _reference_left(alpha, f, x):
    """Brute-force product rule: exact integral of exp kernel times linear interpolant."""
    out = np.zeros(len(x), dtype=complex)
    for i in range(1, len(x)):
        fine = np.linspace(0.0, x[i], 20001)
        g = np.interp(fine, x, f.real) + 1j * np.interp(fine, x, f.imag)
        out[i] = np.trapezoid(np.exp(-(x[i] - fine) * alpha) * g, fine)
    return out


def test_linear_density_is_exact():
    x = np.linspace(0.0, 1.0, 21)
    h = x[1] - x[0]
    alpha = 3.0 + 2.0j
    f = 1.0 + 2.0 * x
    # closed form of int_0^x e^{-alpha (x - s)} (1 + 2 s) ds
    a = alpha
    exact = (1 + 2 * x) / a - 2 / a**2 - np.exp(-a * x) * (1 / a - 2 / a**2)
    got = _accel.conv_left(alpha, f, h)
    assert np.max(np.abs(got - exact)) < 1e-13


def test_matches_fine_quadrature():
    x = np.linspace(0.0, 2.0, 11)
    f = np.sin(3 * x) + 0.5j * x**2
    got = _accel.conv_left(1.5 - 0.5j, f, x[1] - x[0])
    ref = _reference_left(1.5 - 0.5j, f, x)
    assert np.max(np.abs(got - ref)) < 1e-7


def test_right_is_mirrored_left():
    x = np.linspace(0.0, 1.0, 33)
    f = np.exp(x) * np.cos(5 * x)
    h = x[1] - x[0]
    right = _accel.conv_right(2.0, f, h)
    left = _accel.conv_left(2.0, f[::-1], h)[::-1]
    assert np.allclose(right, left, atol=1e-14)


@pytest.mark.parametrize("mu", [1e-6, 5e-4, 9.99e-4, 1.001e-3, 1e-2])
def test_small_argument_weights_are_continuous(mu):
    h = 0.1
    E, wp, wc = _accel.exp_weights(mu / h, h)
    # direct high-precision evaluation through expm1
    m = mu
    wp_ref = h * (-np.expm1(-m) - m * np.exp(-m)) / m**2
    wc_ref = h * (m + np.expm1(-m)) / m**2
    assert abs(wp - wp_ref) < 1e-9 * h
    assert abs(wc - wc_ref) < 1e-9 * h


@pytest.mark.skipif(not _accel.HAVE_NUMBA, reason="numba unavailable")
def test_numba_and_numpy_agree(rng):
    f = rng.normal(size=(3, 4, 50)) + 1j * rng.normal(size=(3, 4, 50))
    for fn in (_accel.conv_left, _accel.conv_right, _accel.conv_sym):
        a = fn(2.0 + 1.0j, f, 0.05, backend="numba")
        b = fn(2.0 + 1.0j, f, 0.05, backend="numpy")
        assert a.shape == f.shape
        assert np.allclose(a, b, rtol=0, atol=1e-13)


def test_unknown_backend():
    with pytest.raises(ValueError):
        _accel.conv_left(1.0, np.ones(5), 0.1, backend="cuda")


def test_env_flag_selects_numpy():
    env = dict(os.environ, CONESOLVE_DISABLE_NUMBA="1")
    out = subprocess.run([sys.executable, "-c", "import conesolve; print(conesolve.active_backend())"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "numpy"
