"""Roots of the transcendental determinants of the clamped angular problem.

Four determinant families are exposed, all of the form ``f(z) = sinh z - c z``:

============  ===================  =====================================
family        determinant          ``c``
============  ===================  =====================================
minus         sinh z - z           ``1``
plus          sinh z + z           ``-1``
sine-minus    sinh z - s z         ``sin(omega) / omega``
sine-plus     sinh z + s z         ``-sin(omega) / omega``
============  ===================  =====================================

For the sine families the variable is ``z = omega sqrt(-lambda)``: the
condition ``sinh(omega sqrt(-lambda)) = +- sqrt(-lambda) sin(omega)`` becomes
``sinh z = +- (sin(omega)/omega) z``.  With this convention every family
yields eigenvalues through the same map ``lambda = -z^2 / omega^2``.

Only roots with ``Re z > 0`` and ``Im z >= 0`` are stored; the determinants
have real coefficients, so the conjugate of every stored root is a root too.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

FAMILIES = ("minus", "plus", "sine-minus", "sine-plus")
UNIT_FAMILIES = ("minus", "plus")
SINE_FAMILIES = ("sine-minus", "sine-plus")

DEFAULT_BOX = (0.1, 40.0, 0.0, 40.0)


class RootError(RuntimeError):
    """Root localisation failed (for instance a root sits on the box boundary)."""


@dataclass(frozen=True)
class TranscendentalRoot:
    """One root of a determinant family, with its derived eigenvalue."""

    value: complex
    family: str
    index: int
    residual: float
    omega: float
    paired: bool = True

    @property
    def eigenvalue(self) -> complex:
        return -(self.value**2) / self.omega**2

    @property
    def conjugate(self) -> complex:
        return self.value.conjugate()


@dataclass
class RootSearch:
    """Result of :func:`find_roots`: roots plus diagnostics."""

    roots: list[TranscendentalRoot]
    count: int
    diagnostics: list[str] = field(default_factory=list)

    def __iter__(self):
        return iter(self.roots)

    def __len__(self) -> int:
        return len(self.roots)


def family_coefficient(family: str, omega: float) -> float:
    """The constant ``c`` in ``sinh z - c z`` for ``family``."""
    if family == "minus":
        return 1.0
    if family == "plus":
        return -1.0
    if family == "sine-minus":
        return math.sin(omega) / omega
    if family == "sine-plus":
        return -math.sin(omega) / omega
    raise ValueError(f"unknown family {family!r}; expected one of {FAMILIES}")


def determinant(family: str, z, omega: float = math.pi / 2):
    """Evaluate ``sinh z - c z``."""
    c = family_coefficient(family, omega)
    return np.sinh(z) - c * np.asarray(z)


def determinant_prime(family: str, z, omega: float = math.pi / 2):
    c = family_coefficient(family, omega)
    return np.cosh(z) - c


def _check_box(box) -> tuple[float, float, float, float]:
    x0, x1, y0, y1 = map(float, box)
    if not (x0 < x1 and y0 < y1):
        raise ValueError(f"degenerate box {box}")
    if x0 <= 0.0:
        raise ValueError("search box must lie in the open right half-plane (Re > 0)")
    return x0, x1, y0, y1


# ---------------------------------------------------------------------------
# argument principle
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class RootCount:
    count: int
    raw: complex
    min_boundary_modulus: float

    @property
    def rounding_error(self) -> float:
        return abs(self.raw.real - self.count) + abs(self.raw.imag)


def _edge_nodes(a: complex, b: complex, panel: float, order: int) -> tuple[np.ndarray, np.ndarray]:
    L = abs(b - a)
    npan = max(1, int(math.ceil(L / panel)))
    xg, wg = np.polynomial.legendre.leggauss(order)
    t0 = np.arange(npan) / npan
    t1 = (np.arange(npan) + 1) / npan
    mid = 0.5 * (t0 + t1)[:, None]
    half = 0.5 * (t1 - t0)[:, None]
    tt = (mid + half * xg[None, :]).ravel()
    ww = (half * wg[None, :]).ravel()
    return a + (b - a) * tt, (b - a) * ww


def count_roots(family: str, box=DEFAULT_BOX, omega: float = math.pi / 2, *,
                boundary_margin: float = 1e-6, panel: float = 0.25, order: int = 16,
                max_refine: int = 5) -> RootCount:
    """Count roots inside ``box`` with the argument principle.

    Evaluates ``(1 / 2 pi i) \\oint f'/f dz`` around the rectangle with
    panelled Gauss-Legendre quadrature, refining the panels until the result
    is within 0.1 of an integer.

    Raises
    ------
    RootError
        If ``|f|`` drops below ``boundary_margin`` on the boundary, or the
        winding number cannot be resolved.
    """
    x0, x1, y0, y1 = _check_box(box)
    corners = [complex(x0, y0), complex(x1, y0), complex(x1, y1), complex(x0, y1)]
    for _ in range(max_refine + 1):
        total = 0.0 + 0.0j
        fmin = math.inf
        for a, b in zip(corners, corners[1:] + corners[:1]):
            z, w = _edge_nodes(a, b, panel, order)
            f = determinant(family, z, omega)
            fp = determinant_prime(family, z, omega)
            fmin = min(fmin, float(np.min(np.abs(f))))
            total += np.sum(w * fp / f)
        if fmin < boundary_margin:
            raise RootError(
                f"root too close to contour: min |f| on boundary {fmin:.2e} < {boundary_margin:.1e}; "
                "perturb the box")
        raw = total / (2j * math.pi)
        n = int(round(raw.real))
        res = RootCount(n, complex(raw), fmin)
        if res.rounding_error < 0.1:
            return res
        panel *= 0.5
    raise RootError(f"argument principle did not resolve (raw count {raw})")


# ---------------------------------------------------------------------------
# Newton polishing
# ---------------------------------------------------------------------------
def _newton(family: str, z0: np.ndarray, omega: float, tol: float, max_iter: int):
    z = np.array(z0, dtype=np.complex128)
    done = np.zeros(z.shape, dtype=bool)
    for _ in range(max_iter):
        f = determinant(family, z, omega)
        fp = determinant_prime(family, z, omega)
        with np.errstate(all="ignore"):
            step = np.where(done, 0.0, f / fp)
        step = np.where(np.isfinite(step), step, 0.0)
        # damp enormous steps that would throw seeds far away
        big = np.abs(step) > 2.0
        step = np.where(big, 2.0 * step / np.maximum(np.abs(step), 1e-300), step)
        z = z - step
        done |= (np.abs(step) <= 1e-15 * np.maximum(1.0, np.abs(z))) | (
            np.abs(determinant(family, z, omega)) < 0.1 * tol)
        if done.all():
            break
    res = np.abs(determinant(family, z, omega))
    return z, res, done


def _asymptotic_seeds(family: str, omega: float, y1: float) -> list[complex]:
    """Seeds from iterating ``z = log(2 c z) + 2 pi i k`` for large roots."""
    c = family_coefficient(family, omega)
    seeds = []
    if c == 0.0:
        return seeds
    kmax = int(y1 / (2 * math.pi)) + 2
    for k in range(0, kmax + 1):
        for shift in (0.0, math.pi):
            z = complex(1.0, 2 * math.pi * k + shift + 0.5 * math.pi)
            for _ in range(30):
                z = np.log(2.0 * c * z + 0j) + 2j * math.pi * k
            seeds.append(complex(z))
    return seeds


def _grid_seeds(family: str, box, omega: float, spacing: float) -> list[complex]:
    x0, x1, y0, y1 = box
    xs = np.arange(x0, x1 + spacing, spacing)
    ys = np.arange(y0, y1 + spacing, spacing)
    Z = xs[None, :] + 1j * ys[:, None]
    # sinh grows like exp(|Re z|); remove the growth so minima are comparable
    M = np.abs(determinant(family, Z, omega)) * np.exp(-np.abs(Z.real))
    seeds = []
    for i in range(1, M.shape[0] - 1):
        for j in range(1, M.shape[1] - 1):
            w = M[i - 1:i + 2, j - 1:j + 2]
            if M[i, j] <= w.min():
                seeds.append(complex(Z[i, j]))
    # edges too: minima next to the boundary rows
    return seeds


def find_roots(family: str, box=DEFAULT_BOX, tol: float = 1e-12, omega: float = math.pi / 2, *,
               max_iter: int = 50, boundary_margin: float = 1e-6, grid_spacing: float = 0.5,
               max_rounds: int = 4) -> RootSearch:
    """Locate every root of ``family`` inside ``box``.

    Seeds come from the asymptotic recursion and from local minima of the
    growth-normalised modulus on a grid; every seed is polished by Newton's
    method.  The number of distinct roots found is compared with
    :func:`count_roots`; on disagreement the scan grid is refined.

    Returns
    -------
    RootSearch
        Roots sorted by increasing ``Im z`` with 1-based ``index``.
    """
    box = _check_box(box)
    x0, x1, y0, y1 = box
    expected = count_roots(family, box, omega, boundary_margin=boundary_margin).count
    diagnostics: list[str] = []
    found: list[complex] = []
    residuals: list[float] = []
    spacing = grid_spacing
    for _ in range(max_rounds):
        seeds = _asymptotic_seeds(family, omega, y1) + _grid_seeds(family, box, omega, spacing)
        if not seeds:
            break
        z, res, conv = _newton(family, np.array(seeds), omega, tol, max_iter)
        for zi, ri, ci, s0 in zip(z, res, conv, seeds):
            if not ci or not np.isfinite(zi):
                if x0 <= s0.real <= x1 and y0 <= s0.imag <= y1:
                    diagnostics.append(f"newton did not converge from seed {s0:.6g}")
                continue
            if zi.imag < 0:
                zi = zi.conjugate()
            if not (x0 < zi.real < x1 and y0 <= zi.imag < y1):
                continue
            if ri >= tol:
                diagnostics.append(f"root {zi:.12g} polished only to residual {ri:.2e}")
                continue
            if any(abs(zi - w) < 1e-8 * max(1.0, abs(w)) for w in found):
                continue
            found.append(complex(zi))
            residuals.append(float(ri))
        if len(found) >= expected:
            break
        spacing *= 0.5
    if len(found) != expected:
        diagnostics.append(
            f"found {len(found)} roots but the argument principle counts {expected}")
    else:
        # every root accounted for: failed seeds only wandered off
        diagnostics = [d for d in diagnostics if not d.startswith("newton")]
    order = np.argsort([abs(w.imag) for w in found])
    roots = [
        TranscendentalRoot(found[i], family, rank + 1, residuals[i], omega, paired=found[i].imag != 0.0)
        for rank, i in enumerate(order)
    ]
    newton = [d for d in diagnostics if d.startswith("newton")]
    diagnostics = [d for d in diagnostics if not d.startswith("newton")] + newton[:5]
    return RootSearch(roots, expected, diagnostics)


def tau(roots) -> float:
    """``min |Im z|`` over a collection of roots."""
    vals = [abs(r.value.imag if isinstance(r, TranscendentalRoot) else complex(r).imag) for r in roots]
    if not vals:
        raise RootError("tau of an empty root list")
    return float(min(vals))


def compute_tau(box=(0.1, 30.0, 0.0, 30.0), tol: float = 1e-12) -> float:
    """``tau`` over the two root families ``sinh z = +- z``."""
    allroots = []
    for fam in UNIT_FAMILIES:
        allroots.extend(find_roots(fam, box, tol).roots)
    return tau(allroots)


@dataclass(frozen=True)
class Separation:
    ok: bool
    margin: float
    tau: float


def check_separation(omega: float, nu: float, tau_value: float | None = None) -> Separation:
    """Decide the hypothesis ``omega nu < tau``; ``margin = tau - omega nu``."""
    if not (0.0 < omega <= 2 * math.pi + 1e-15):
        raise ValueError("omega must lie in (0, 2 pi]")
    t = compute_tau() if tau_value is None else float(tau_value)
    margin = t - omega * nu
    return Separation(bool(margin > 0.0), float(margin), t)


def _lambda_one_determinant(omega: float) -> float:
    """Clamped determinant of ``{1, theta, cos 2theta, sin 2theta}`` at ``lambda = 1``.

    At ``lambda = 1`` two characteristic roots merge at 0, so the exponential
    determinants say nothing; this 4 x 4 determinant decides instead.
    """
    c2, s2 = math.cos(2 * omega), math.sin(2 * omega)
    M = np.array([[1.0, 0.0, 1.0, 0.0],
                  [0.0, 1.0, 0.0, 2.0],
                  [1.0, omega, c2, s2],
                  [0.0, 1.0, -2.0 * s2, 2.0 * c2]])
    return float(np.linalg.det(M))


def imaginary_axis_eigenvalues(omega: float, families=SINE_FAMILIES, y_max: float = 40.0,
                               samples: int = 40001) -> list[float]:
    """Real positive eigenvalues from roots ``z = i y`` of the sine families.

    On the imaginary axis ``sinh(i y) - c i y = i (sin y - c y)``, so the roots
    are the positive zeros of ``sin y - c y``; each gives ``lambda = y^2/omega^2``.
    The root ``y = omega`` (``lambda = 1``) is kept only when the degenerate
    determinant at ``lambda = 1`` vanishes.  The unit families have no such
    roots (``sin y = +-y`` forces ``y = 0``).
    """
    from scipy.optimize import brentq

    out: list[float] = []
    seen_c: set[float] = set()
    for fam in families:
        if fam not in SINE_FAMILIES:
            continue
        c = family_coefficient(fam, omega)
        if c in seen_c:  # sin(omega) = 0 makes both sine families coincide
            continue
        seen_c.add(c)
        g = lambda y: math.sin(y) - c * y  # noqa: E731
        ys = np.linspace(1e-9, y_max, samples)
        v = np.sin(ys) - c * ys
        for i in np.nonzero(np.sign(v[:-1]) != np.sign(v[1:]))[0]:
            y = brentq(g, ys[i], ys[i + 1], xtol=1e-14)
            if abs(y - omega) < 1e-9 * max(1.0, omega):
                if abs(_lambda_one_determinant(omega)) > 1e-8:
                    continue
            out.append((y / omega) ** 2)
    return sorted(out)


def eigenvalues(omega: float, families=SINE_FAMILIES, box=DEFAULT_BOX, tol: float = 1e-12,
                include_real: bool = True) -> list[complex]:
    """Eigenvalues ``-z^2/omega^2`` for both members of each conjugate pair.

    With ``include_real`` the real positive eigenvalues coming from purely
    imaginary roots are appended (relevant for ``omega >= pi``).
    """
    out: list[complex] = []
    seen_c: set[float] = set()
    for fam in families:
        c = family_coefficient(fam, omega)
        if c in seen_c:
            continue
        seen_c.add(c)
        for r in find_roots(fam, box, tol, omega).roots:
            lam = r.eigenvalue
            out.append(lam)
            if r.paired:
                out.append(lam.conjugate())
    if include_real:
        out.extend(complex(v) for v in imaginary_axis_eigenvalues(omega, families, y_max=box[3]))
    return out


def estimate_eps0(omega: float, box=DEFAULT_BOX) -> float:
    """Half the distance from 0 to the nearest sine-family eigenvalue."""
    eigs = eigenvalues(omega, SINE_FAMILIES, box)
    if not eigs:
        raise RootError("no eigenvalues found in the search box")
    return 0.5 * float(np.min(np.abs(eigs)))


def min_re_sqrt(eigs) -> float:
    """``min Re sqrt(lambda_j)`` with the principal root."""
    if len(eigs) == 0:
        raise RootError("no eigenvalues supplied")
    return float(np.min(np.sqrt(np.asarray(eigs, dtype=np.complex128)).real))
