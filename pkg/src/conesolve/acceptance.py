"""The ten acceptance criteria, shared by ``conesolve verify`` and the test suite.

Each ``criterion_N`` returns a :class:`CriterionResult` holding a pass flag,
the measured quantities and the tolerance used.  Wall-clock runtimes are kept
in ``runtime`` and only their comparison with the budget enters ``measured``,
so the JSON verdict is reproducible byte for byte.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import angular, bip, dpg, perturbation, roots, temporal
from .corpus import angular_corpus, angular_state, field_corpus
from .grid import AngularGrid, ProblemParams, SpaceTimeField, TemporalGrid, StateVector, x_norm


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    measured: dict
    tolerance: str
    runtime: float = 0.0
    notes: list = field(default_factory=list)

    def line(self) -> str:
        """One-line verdict with up to four scalar measurements."""
        shown = []
        for k, v in self.measured.items():
            if isinstance(v, (bool, np.bool_)) or not isinstance(v, (int, float, np.integer, np.floating)):
                continue
            shown.append(f"{k}={float(v):.4g}")
            if len(shown) == 4:
                break
        got = f" [{', '.join(shown)}]" if shown else ""
        return f"[{'PASS' if self.passed else 'FAIL'}] A{self.number} {self.name}: {self.tolerance}{got}"

    def as_dict(self) -> dict:
        return {"number": self.number, "name": self.name,
                "status": "pass" if self.passed else "fail",
                "tolerance": self.tolerance, "measured": _jsonable(self.measured),
                "notes": list(self.notes)}


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


# ---------------------------------------------------------------------------
# 1. tau
# ---------------------------------------------------------------------------
TAU_REFERENCE = 4.21239


def criterion_1() -> CriterionResult:
    t0 = time.perf_counter()
    found = {f: roots.find_roots(f, (0.1, 30.0, 0.0, 30.0)) for f in roots.UNIT_FAMILIES}
    all_roots = [r for s in found.values() for r in s.roots]
    tau = roots.tau(all_roots)
    lowest = min(all_roots, key=lambda r: abs(r.value.imag))
    dt = time.perf_counter() - t0
    ok_counts = all(s.count == len(s.roots) for s in found.values())
    passed = abs(tau - TAU_REFERENCE) <= 1e-3 and dt < 5.0 and ok_counts
    return CriterionResult(1, "tau reproduction", passed,
                           {"tau": tau, "error": abs(tau - TAU_REFERENCE), "family": lowest.family,
                            "counts_agree": ok_counts, "runtime_ok": dt < 5.0},
                           "|tau - 4.21239| <= 1e-3, runtime < 5 s", dt)


# ---------------------------------------------------------------------------
# 2. multiplier
# ---------------------------------------------------------------------------
def criterion_2(rs=(0.1, 1.0, 10.0)) -> CriterionResult:
    t0 = time.perf_counter()
    grid = bip.xi_grid()
    rows = {}
    ok = True
    for r in rs:
        sb = bip.sup_bounds(r, grid, form="closed")
        ar = abs(r)
        checks = {
            "limit_m": abs(sb.limit_m - ar / 2) <= 1e-6,
            "limit_xm": abs(sb.limit_xm - 3 * ar / 32) <= 1e-6,
            "sup_m": abs(sb.sup_m - ar / 2) <= 1e-3,
            "sup_xm": abs(sb.sup_xm - 3 * ar / 32) <= 1e-3,
            "mikhlin_sum": abs(sb.mikhlin_sum - 19 * ar / 32) <= 1e-3,
        }
        exact = bip.sup_bounds(r, grid, form="exact")
        rows[str(r)] = {**sb.as_dict(), "checks": checks,
                        "exact_sup_xm": exact.sup_xm, "exact_argmax_xm": exact.argmax_xm}
        ok &= all(checks.values())
    dt = time.perf_counter() - t0
    ok &= dt < 10.0
    return CriterionResult(2, "multiplier identities", bool(ok), {"r": rows, "runtime_ok": dt < 10.0},
                           "limits within 1e-6, suprema and 19|r|/32 within 1e-3, runtime < 10 s", dt,
                           ["xi m' uses the closed form with 1/32 prefactors; the exact derivative "
                            "is reported as exact_sup_xm"])


# ---------------------------------------------------------------------------
# 3. angular oracle
# ---------------------------------------------------------------------------
def criterion_3(sizes=(65, 129, 257), lam: float = -1.0, seed: int = 0) -> CriterionResult:
    t0 = time.perf_counter()
    om = math.pi / 2
    errs = []
    for n in sizes:
        g = AngularGrid(om, n)
        F = angular_state(g, seed)
        K = angular.resolve_A(lam, F)
        D = angular.fd_resolve_A(lam, F)
        errs.append(float(x_norm(K - D, 2.0) / x_norm(D, 2.0)))
    hs = [om / (n - 1) for n in sizes]
    order = float(np.polyfit(np.log(hs), np.log(errs), 1)[0])
    passed = errs[-1] <= 1e-3 and abs(order - 2.0) <= 0.5
    return CriterionResult(3, "angular resolvent vs FD oracle", passed,
                           {"sizes": list(sizes), "errors": errs, "order": order},
                           "error <= 1e-3 at N = 257, order 2 +- 0.5", time.perf_counter() - t0)


# ---------------------------------------------------------------------------
# 4. resolvent decay
# ---------------------------------------------------------------------------
def criterion_4(n: int = 129, seed: int = 0) -> CriterionResult:
    t0 = time.perf_counter()
    g = AngularGrid(math.pi / 2, n)
    corpus = angular_corpus(g, 20, seed)
    lams = -np.logspace(0.0, 4.0, 17)
    rep = angular.verify_resolvent_bound(lams, corpus, g, 2.0)
    return CriterionResult(4, "resolvent decay", rep.passed,
                           {"M": rep.M, "tail_slope": rep.tail_slope,
                            "scaled": [float(x) for x in rep.scaled]},
                           "(1+|lambda|) r(lambda) bounded, tail slope -1 +- 0.15",
                           time.perf_counter() - t0)


# ---------------------------------------------------------------------------
# 5. temporal resolvent
# ---------------------------------------------------------------------------
def criterion_5(nu: float = 2.0, eps: float = 0.1, seed: int = 0) -> CriterionResult:
    t0 = time.perf_counter()
    tg = TemporalGrid(30.0, 8001)
    t = tg.nodes
    errs = {}
    for lam in (10.0, 16.0, 100.0, 30.0 + 20.0j):
        V = temporal.resolve_L1_array(lam, np.exp(-t), tg, nu)
        errs[str(lam)] = float(np.max(np.abs(V - temporal.exponential_example(lam, nu, t))))
    exact_ok = max(errs.values()) <= 1e-6
    samples = temporal.sigma_L1_samples(nu, eps, 50, seed)
    tgc = TemporalGrid(30.0, 3001)
    from .corpus import temporal_profiles
    rep = temporal.verify_L1_bound(samples, temporal_profiles(tgc, 5, seed), tgc, nu, eps)
    d = rep.as_dict()
    worst = max(r / b for r, b in zip(rep.ratios, rep.bounds))
    return CriterionResult(5, "temporal resolvent", bool(exact_ok and rep.passed),
                           {"example_errors": errs, "bound_passed": rep.passed,
                            "max_ratio_over_bound": worst, "min_slack": d["min_slack"]},
                           "exact example within 1e-6; M_L1 = 4/sin(eps) bound on 50 samples",
                           time.perf_counter() - t0)


# ---------------------------------------------------------------------------
# shared desk-scale setup for 6, 8 and 10
# ---------------------------------------------------------------------------
@dataclass
class DeskSetup:
    params: ProblemParams
    tgrid: TemporalGrid
    agrid: AngularGrid
    contour: dpg.Contour
    inverter: dpg.DPGInverter


_DESK: DeskSetup | None = None


def desk_setup(n_theta: int = 32, n_t: int = 64, T: float = 20.0, n_nodes: int = 200) -> DeskSetup:
    global _DESK
    key = (n_theta, n_t, T, n_nodes)
    if _DESK is not None and (_DESK.agrid.n, _DESK.tgrid.n, _DESK.tgrid.T, _DESK.contour.n_nodes) == key:
        return _DESK
    params = ProblemParams()
    eigs = roots.eigenvalues(params.omega)
    c = dpg.build_contour(params, eigs, n_nodes)
    tg = TemporalGrid(T, n_t)
    ag = AngularGrid(params.omega, n_theta)
    _DESK = DeskSetup(params, tg, ag, c, dpg.DPGInverter(c, tg, ag))
    return _DESK


def criterion_6(seed: int = 0) -> CriterionResult:
    t0 = time.perf_counter()
    d = desk_setup()
    sep = dpg.discrete_separation(d.contour, d.agrid, d.tgrid)
    errs, times = [], []
    for F in field_corpus(d.tgrid, d.agrid, 10, seed):
        s = time.perf_counter()
        V = dpg.DPGInverter(d.contour, d.tgrid, d.agrid).apply(F)
        times.append(time.perf_counter() - s)
        W = dpg.direct_sum_solve(F, d.params.nu)
        errs.append(dpg.relative_discrepancy(V, W))
    passed = max(errs) <= 1e-3 and max(times) < 60.0 and sep.ok
    return CriterionResult(6, "DP-G vs direct solve", passed,
                           {"max_discrepancy": max(errs), "discrepancies": errs,
                            "nu_prime": d.contour.nu_prime, "discrete_separation": sep.ok,
                            "runtime_ok": max(times) < 60.0},
                           "relative discrepancy <= 1e-3 on 10 fields, < 60 s per field",
                           time.perf_counter() - t0)


# ---------------------------------------------------------------------------
# 7. eigenvalue blow-up
# ---------------------------------------------------------------------------
def criterion_7(n: int = 129, seed: int = 0, direction: float = 0.3) -> CriterionResult:
    t0 = time.perf_counter()
    om = math.pi / 2
    g = AngularGrid(om, n)
    corpus = angular_corpus(g, 20, seed)
    u = complex(math.cos(direction), math.sin(direction))

    def factor(lam0, method):
        near = float(np.max(angular.norm_ratio(lam0 + 1e-3 * u, corpus, g, 2.0, method=method)))
        far = float(np.max(angular.norm_ratio(lam0 + 0.5 * u, corpus, g, 2.0, method=method)))
        return near / far

    sine_eig = min(roots.eigenvalues(om), key=abs)
    unit_roots = [r for f in roots.UNIT_FAMILIES for r in roots.find_roots(f, omega=om).roots]
    unit_eig = min([r.eigenvalue for r in unit_roots], key=abs)
    res = {
        "sine_eigenvalue": complex(sine_eig), "unit_eigenvalue": complex(unit_eig),
        "sine_kernel": factor(sine_eig, "kernel"), "sine_fd": factor(sine_eig, "fd"),
        "unit_kernel": factor(unit_eig, "kernel"), "unit_fd": factor(unit_eig, "fd"),
    }
    blowup = [fam for fam in ("sine", "unit") if res[f"{fam}_fd"] >= 100.0]
    res["blow_up_families"] = blowup
    passed = res["sine_kernel"] >= 100.0
    return CriterionResult(7, "eigenvalue blow-up", passed, res,
                           "norm at distance 1e-3 / norm at distance 0.5 >= 100 (sine family)",
                           time.perf_counter() - t0,
                           [f"blow-up observed with the FD oracle for: {', '.join(blowup) or 'none'}"])


# ---------------------------------------------------------------------------
# 8. full solve
# ---------------------------------------------------------------------------
_SOLVES: dict = {}


def _full_solve_run(seed: int = 0):
    if seed in _SOLVES:
        return _SOLVES[seed]
    d = desk_setup()
    probes = field_corpus(d.tgrid, d.agrid, 5, seed + 1)
    rho0, q1 = perturbation.estimate_rho0(1.0, d.params, d.inverter, probes)
    Vstar = field_corpus(d.tgrid, d.agrid, 1, seed + 2, vanish_at_ends=True)[0]
    params = d.params.replace(k=1.0, rho=rho0)
    F = perturbation.manufactured_rhs(Vstar, params)
    sol = perturbation.solve_full(F, params, d.inverter)
    out = {"rho0": rho0, "q1": q1, "params": params, "Vstar": Vstar, "F": F, "sol": sol}
    try:
        perturbation.solve_full(F, params.replace(rho=4.0 * rho0), d.inverter)
        out["diverged"] = False
        out["div_ratios"] = []
    except perturbation.DivergenceError as exc:
        out["diverged"] = True
        out["div_ratios"] = list(exc.trace.ratios)
    _SOLVES[seed] = out
    return out


def criterion_8(seed: int = 0) -> CriterionResult:
    t0 = time.perf_counter()
    run = _full_solve_run(seed)
    sol = run["sol"]
    err = dpg.relative_discrepancy(sol.V, run["Vstar"])
    ratio_ok = sol.trace.max_ratio < 1.0
    passed = err <= 1e-5 and sol.residual <= 1e-5 and ratio_ok and run["diverged"]
    return CriterionResult(8, "full solve", bool(passed),
                           {"rho0": run["rho0"], "q1": run["q1"], "recovery_error": err,
                            "residual": sol.residual, "iterations": sol.trace.iterations,
                            "max_ratio": sol.trace.max_ratio, "diverges_at_4rho0": run["diverged"],
                            "divergence_ratios": run["div_ratios"][:6]},
                           "recovery within 1e-5, ratio < 1, divergence at 4 rho0",
                           time.perf_counter() - t0)


# ---------------------------------------------------------------------------
# 9. lemma suite
# ---------------------------------------------------------------------------
def criterion_9(cases: int = 20, seed: int = 2024, n: int = 257) -> CriterionResult:
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    eps_cache: dict = {}
    worst = math.inf
    worst_name = ""
    worst_id = 0.0
    ok = True
    records = []
    for case in range(cases):
        om = float(rng.uniform(math.pi / 4, 2 * math.pi))
        eps0 = eps_cache.setdefault(om, roots.estimate_eps0(om))
        lam = -max(eps0, 1.0) * 10 ** float(rng.uniform(0.0, 3.0))
        g = AngularGrid(om, n)
        F = angular_state(g, int(rng.integers(0, 10**6)))
        ineqs = angular.verify_lemma_bounds(lam, F, 2.0, eps0)
        ident = angular.lemma_identity_residual(math.sqrt(-lam), om)
        low = min(ineqs, key=lambda i: i.relative_slack)
        ok &= all(i.relative_slack > 0 for i in ineqs) and ident <= 1e-8
        worst_id = max(worst_id, ident)
        if low.relative_slack < worst:
            worst, worst_name = low.relative_slack, low.name
        records.append({"omega": om, "lambda": lam, "min_relative_slack": low.relative_slack,
                        "tightest": low.name, "identity_residual": ident})
    return CriterionResult(9, "lemma suite", bool(ok),
                           {"min_relative_slack": worst, "tightest": worst_name,
                            "max_identity_residual": worst_id, "cases": records},
                           "identity residual <= 1e-8, all inequalities with positive slack",
                           time.perf_counter() - t0)


# ---------------------------------------------------------------------------
# 10. regularity
# ---------------------------------------------------------------------------
def criterion_10(seed: int = 0) -> CriterionResult:
    t0 = time.perf_counter()
    run = _full_solve_run(seed)
    d = desk_setup()
    reports = {"full_solve": perturbation.classical_regularity_check(run["sol"].V, run["F"], run["params"])}
    F0 = field_corpus(d.tgrid, d.agrid, 1, seed + 3)[0]
    V0 = perturbation.solve_full(F0, d.params.replace(k=0.0), d.inverter).V
    reports["k0_solve"] = perturbation.classical_regularity_check(V0, F0, d.params.replace(k=0.0))
    passed = all(r.passed for r in reports.values())
    return CriterionResult(10, "regularity report", passed,
                           {k: r.as_dict() for k, r in reports.items()},
                           "finite ||V''||, ||A V||, clamped traces, V(0) = 0",
                           time.perf_counter() - t0)


CRITERIA = {1: criterion_1, 2: criterion_2, 3: criterion_3, 4: criterion_4, 5: criterion_5,
            6: criterion_6, 7: criterion_7, 8: criterion_8, 9: criterion_9, 10: criterion_10}


def run_all(only=None) -> list[CriterionResult]:
    ids = sorted(CRITERIA) if only is None else sorted(only)
    return [CRITERIA[i]() for i in ids]


__all__ = ["CRITERIA", "CriterionResult", "desk_setup", "run_all"] + [f"criterion_{i}" for i in range(1, 11)]
