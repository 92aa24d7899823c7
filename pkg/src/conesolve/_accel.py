"""Hot kernels: one-sided exponential convolutions on a uniform grid.

Two interchangeable implementations are provided.  The numba version is
compiled with ``@njit`` and is used by default when numba imports cleanly.
Setting the environment variable ``CONESOLVE_DISABLE_NUMBA=1`` before the
package is imported selects the pure-numpy version instead, which loops over
the grid axis and vectorizes across the batch axis.

Quadrature
----------
Both kernels evaluate

    L(x_i) = int_0^{x_i} exp(-(x_i - s) alpha) f(s) ds
    R(x_i) = int_{x_i}^{b} exp(-(s - x_i) alpha) f(s) ds

with *product trapezoid* weights.  On every cell the density ``f`` is replaced
by its linear interpolant and the exponential is integrated exactly, which
gives the recurrences

    L_i = E L_{i-1} + w_prev f_{i-1} + w_cur f_i
    R_i = E R_{i+1} + w_prev f_{i+1} + w_cur f_i

with ``E = exp(-alpha h)``.  The rule is second order for smooth ``f``.  It
stays exact for piecewise-linear densities for any ``alpha h``, which keeps
the error uniform in the spectral parameter.
"""
from __future__ import annotations

import os

import numpy as np

_FLAG = os.environ.get("CONESOLVE_DISABLE_NUMBA", "").strip().lower()
_DISABLED = _FLAG in {"1", "true", "yes", "on"}

try:  # pragma: no cover - exercised implicitly by the import
    if _DISABLED:
        raise ImportError("numba disabled by CONESOLVE_DISABLE_NUMBA")
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - depends on the environment
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA


def exp_weights(alpha: complex, h: float) -> tuple[complex, complex, complex]:
    """Return ``(E, w_prev, w_cur)`` for the product trapezoid rule.

    A short Taylor expansion is used when ``|alpha h|`` is tiny, where the
    closed forms suffer from cancellation.
    """
    mu = complex(alpha) * h
    E = np.exp(-mu)
    if abs(mu) < 1e-3:
        w_prev = h * (0.5 - mu / 3.0 + mu * mu / 8.0 - mu**3 / 30.0)
        w_cur = h * (0.5 - mu / 6.0 + mu * mu / 24.0 - mu**3 / 120.0)
    else:
        w_prev = h * (1.0 - E * (1.0 + mu)) / (mu * mu)
        w_cur = h * (mu - 1.0 + E) / (mu * mu)
    return complex(E), complex(w_prev), complex(w_cur)


# --------------------------------------------------------------------------
# numpy implementation
# --------------------------------------------------------------------------
def _left_numpy(E, wp, wc, f):
    out = np.zeros_like(f)
    n = f.shape[1]
    for i in range(1, n):
        out[:, i] = E * out[:, i - 1] + wp * f[:, i - 1] + wc * f[:, i]
    return out


def _right_numpy(E, wp, wc, f):
    out = np.zeros_like(f)
    n = f.shape[1]
    for i in range(n - 2, -1, -1):
        out[:, i] = E * out[:, i + 1] + wp * f[:, i + 1] + wc * f[:, i]
    return out


# --------------------------------------------------------------------------
# numba implementation
# --------------------------------------------------------------------------
if HAVE_NUMBA:

    @njit(cache=True)
    def _left_numba(E, wp, wc, f):  # pragma: no cover - compiled
        nb, n = f.shape
        out = np.zeros_like(f)
        for b in range(nb):
            acc = 0.0 + 0.0j
            for i in range(1, n):
                acc = E * acc + wp * f[b, i - 1] + wc * f[b, i]
                out[b, i] = acc
        return out

    @njit(cache=True)
    def _right_numba(E, wp, wc, f):  # pragma: no cover - compiled
        nb, n = f.shape
        out = np.zeros_like(f)
        for b in range(nb):
            acc = 0.0 + 0.0j
            for i in range(n - 2, -1, -1):
                acc = E * acc + wp * f[b, i + 1] + wc * f[b, i]
                out[b, i] = acc
        return out


def _as_batch(f: np.ndarray) -> tuple[np.ndarray, tuple[int, ...]]:
    f = np.asarray(f, dtype=np.complex128)
    shape = f.shape
    return np.ascontiguousarray(f.reshape(-1, shape[-1])), shape


def conv_left(alpha: complex, f: np.ndarray, h: float, *, backend: str | None = None) -> np.ndarray:
    """Causal exponential convolution along the last axis of ``f``."""
    E, wp, wc = exp_weights(alpha, h)
    fb, shape = _as_batch(f)
    if _pick(backend) == "numba":
        out = _left_numba(E, wp, wc, fb)
    else:
        out = _left_numpy(E, wp, wc, fb)
    return out.reshape(shape)


def conv_right(alpha: complex, f: np.ndarray, h: float, *, backend: str | None = None) -> np.ndarray:
    """Anti-causal exponential convolution along the last axis of ``f``."""
    E, wp, wc = exp_weights(alpha, h)
    fb, shape = _as_batch(f)
    if _pick(backend) == "numba":
        out = _right_numba(E, wp, wc, fb)
    else:
        out = _right_numpy(E, wp, wc, fb)
    return out.reshape(shape)


def conv_sym(alpha: complex, f: np.ndarray, h: float, *, backend: str | None = None) -> np.ndarray:
    """Two-sided kernel ``K_alpha[f] = conv_left + conv_right``."""
    return conv_left(alpha, f, h, backend=backend) + conv_right(alpha, f, h, backend=backend)


def _pick(backend: str | None) -> str:
    if backend is None:
        return "numba" if USE_NUMBA else "numpy"
    if backend not in ("numba", "numpy"):
        raise ValueError(f"unknown kernel backend {backend!r}")
    if backend == "numba" and not HAVE_NUMBA:
        raise RuntimeError("numba backend requested but numba is unavailable or disabled")
    return backend


def active_backend() -> str:
    """Name of the kernel implementation used when none is requested."""
    return _pick(None)
