"""Command-line front end.

Every subcommand reads an optional configuration file (see
:mod:`conesolve.config`) and writes its artifacts to ``--out``.  CSV files start
with a ``# {json}`` line holding the resolved configuration; JSON files embed it
under ``"config"`` next to ``"schema": 1``.  Exit codes: 0 success, 1 failed
verification, 2 usage or configuration error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from contextlib import contextmanager

import numpy as np

from . import acceptance, angular, bip, dpg, perturbation, roots, temporal
from .config import ConfigError, RunConfig, load_config
from .corpus import angular_state, field_corpus
from .grid import AngularGrid, SpaceTimeField, StateVector, TemporalGrid, truncation_length

SCHEMA = 1
EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
LOCK_NAME = ".conesolve.lock"


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# output helpers
# ---------------------------------------------------------------------------
def _fmt(x) -> str:
    return repr(float(x))


def _json_default(o):
    if isinstance(o, complex):
        return [o.real, o.imag]
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not serializable: {type(o)}")


def write_json(path: str, payload: dict, cfg: RunConfig) -> None:
    doc = {"schema": SCHEMA, "config": cfg.as_dict(), **payload}
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")


def write_csv(path: str, header: list[str], rows, cfg: RunConfig, meta: dict | None = None) -> None:
    head = {"schema": SCHEMA, "config": cfg.as_dict()}
    if meta:
        head["meta"] = meta
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("# " + json.dumps(head, sort_keys=True, default=_json_default) + "\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([v if isinstance(v, str) else _fmt(v) for v in row])


def field_rows(V: SpaceTimeField):
    """Rows ``(t, theta, re psi1, im psi1, re psi2, im psi2)``."""
    for m, t in enumerate(V.tgrid.nodes):
        for j, th in enumerate(V.agrid.nodes):
            a, b = V.values[m, 0, j], V.values[m, 1, j]
            yield (t, th, a.real, a.imag, b.real, b.imag)


FIELD_HEADER = ["t", "theta", "re_psi1", "im_psi1", "re_psi2", "im_psi2"]


def field_meta(V: SpaceTimeField) -> dict:
    return {"T": V.tgrid.T, "n_t": V.tgrid.n, "omega": V.agrid.omega, "n_theta": V.agrid.n}


def read_field_csv(path: str) -> SpaceTimeField:
    """Inverse of the field CSV writer (grid taken from the JSON header)."""
    with open(path, encoding="utf-8") as fh:
        first = fh.readline()
        if not first.startswith("# "):
            raise UsageError(f"{path}: missing JSON header line")
        meta = json.loads(first[2:]).get("meta")
        if not meta or "n_t" not in meta:
            raise UsageError(f"{path}: header lacks grid metadata")
        data = np.loadtxt(fh, delimiter=",", skiprows=1, ndmin=2)
    tg = TemporalGrid(meta["T"], meta["n_t"])
    ag = AngularGrid(meta["omega"], meta["n_theta"])
    vals = np.empty((tg.n, 2, ag.n), dtype=np.complex128)
    d = data.reshape(tg.n, ag.n, 6)
    vals[:, 0] = d[..., 2] + 1j * d[..., 3]
    vals[:, 1] = d[..., 4] + 1j * d[..., 5]
    return SpaceTimeField(vals, tg, ag)


@contextmanager
def run_lock(out_dir: str):
    """Exclusive lock file in ``out_dir``; a second concurrent run fails fast."""
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, LOCK_NAME)
    try:
        fd = os.open(path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
    except FileExistsError:
        raise UsageError(f"output directory {out_dir} is locked by another run ({path})") from None
    try:
        os.write(fd, str(os.getpid()).encode())
        os.close(fd)
        yield
    finally:
        try:
            os.remove(path)
        except FileNotFoundError:
            pass


# ---------------------------------------------------------------------------
# shared construction
# ---------------------------------------------------------------------------
def _grids(cfg: RunConfig, contour: dpg.Contour | None = None):
    T = cfg.grid.T
    if T == "auto":
        if contour is None:
            raise UsageError("T = auto needs a contour")
        T = truncation_length(cfg.params.nu, contour.nu_prime, cfg.tol.decay_tol)
    return TemporalGrid(float(T), cfg.grid.n_t), AngularGrid(cfg.params.omega, cfg.grid.n_theta)


def _contour(cfg: RunConfig) -> dpg.Contour:
    eigs = roots.eigenvalues(cfg.params.omega)
    nu_prime = None if cfg.contour.nu_prime == "auto" else float(cfg.contour.nu_prime)
    return dpg.build_contour(cfg.params, eigs, cfg.contour.n_nodes, cfg.contour.s_max,
                             scale=cfg.contour.scale, nu_prime=nu_prime)


def _out(args, name: str) -> str:
    return os.path.join(args.out, name)


def _parse_complex(text: str) -> complex:
    parts = [p.strip() for p in text.split(",")]
    try:
        if len(parts) == 1:
            return complex(float(parts[0]), 0.0)
        if len(parts) == 2:
            return complex(float(parts[0]), float(parts[1]))
    except ValueError:
        pass
    raise UsageError(f"cannot parse complex value {text!r}; use 're' or 're,im'")


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------
def cmd_roots(args, cfg: RunConfig) -> int:
    box = tuple(args.box) if args.box else (0.1, 30.0, 0.0, 30.0)
    rows, summary = [], {}
    for fam in args.families:
        res = roots.find_roots(fam, box, cfg.tol.root_tol, cfg.params.omega)
        summary[fam] = {"count": res.count, "found": len(res.roots), "diagnostics": res.diagnostics}
        for r in res.roots:
            lam = r.eigenvalue
            rows.append((fam, str(r.index), r.value.real, r.value.imag, r.residual, lam.real, lam.imag))
    unit = [float(r[3]) for r in rows if r[0] in roots.UNIT_FAMILIES]
    tau = min(abs(x) for x in unit) if unit else None
    write_csv(_out(args, "roots.csv"), ["family", "index", "re", "im", "residual", "eig_re", "eig_im"],
              rows, cfg, {"box": list(box)})
    sep = roots.check_separation(cfg.params.omega, cfg.params.nu, tau) if tau else None
    write_json(_out(args, "roots.json"), {"tau": tau, "families": summary,
                                          "separation": None if sep is None else
                                          {"ok": sep.ok, "margin": sep.margin}}, cfg)
    print(f"tau = {tau:.6f}" if tau else "tau: no first-section family requested")
    return EXIT_OK


def cmd_eigs(args, cfg: RunConfig) -> int:
    om = cfg.params.omega
    eigs = roots.eigenvalues(om)
    eps0 = roots.estimate_eps0(om)
    rows = sorted(((e.real, e.imag, np.sqrt(complex(e)).real) for e in eigs), key=lambda r: (r[2], r[0], r[1]))
    write_csv(_out(args, "eigs.csv"), ["re", "im", "re_sqrt"], rows, cfg)
    low = roots.min_re_sqrt(eigs)
    write_json(_out(args, "eigs.json"), {"eps0": eps0, "min_re_sqrt": low,
                                         "separated": low > cfg.params.nu}, cfg)
    print(f"{len(eigs)} eigenvalues; min Re sqrt = {low:.6f}; eps0 = {eps0:.6f}")
    return EXIT_OK


def cmd_resolve_angular(args, cfg: RunConfig) -> int:
    lam = _parse_complex(args.lam)
    g = AngularGrid(cfg.params.omega, cfg.grid.n_theta)
    F = angular_state(g, cfg.seed)
    try:
        V = angular.resolve_A(lam, F, args.variant)
    except angular.ResolventError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    rows = [(th, a.real, a.imag, b.real, b.imag) for th, a, b in zip(g.nodes, V.psi1, V.psi2)]
    write_csv(_out(args, "resolvent.csv"), ["theta", "re_psi1", "im_psi1", "re_psi2", "im_psi2"], rows, cfg,
              {"lambda": lam, "variant": args.variant})
    D = angular.fd_resolve_A(lam, F)
    from .grid import x_norm
    report = {"lambda": lam, "variant": args.variant,
              "fd_discrepancy": float(x_norm(V - D, cfg.params.p) / x_norm(D, cfg.params.p))}
    eps0 = roots.estimate_eps0(cfg.params.omega)
    if lam.imag == 0 and lam.real <= -eps0:
        report["inequalities"] = [i.as_dict() for i in
                                  angular.verify_lemma_bounds(lam.real, F, cfg.params.p, eps0, variant=args.variant)]
    write_json(_out(args, "resolvent.json"), report, cfg)
    print(f"FD discrepancy {report['fd_discrepancy']:.3e}")
    return EXIT_OK


def cmd_resolve_temporal(args, cfg: RunConfig) -> int:
    lam = _parse_complex(args.lam)
    nu = cfg.params.nu
    T = 30.0 if cfg.grid.T == "auto" else float(cfg.grid.T)
    tg = TemporalGrid(T, args.n_t)
    ag = AngularGrid(cfg.params.omega, cfg.grid.n_theta)
    phi = angular_state(ag, cfg.seed).psi1
    R = SpaceTimeField.from_function(lambda t, th: (np.exp(-t) * phi, 0.0 * t * phi), tg, ag)
    try:
        V = temporal.resolve_L1(lam, R, nu)
    except temporal.TemporalResolventError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    write_csv(_out(args, "temporal.csv"), FIELD_HEADER, field_rows(V), cfg, field_meta(V))
    report = {"lambda": lam, "in_sigma_nu": temporal.in_sigma_nu(lam, nu)}
    if abs((1 + nu) ** 2 - lam) > 1e-8:
        ex = temporal.exponential_example(lam, nu, tg.nodes)[:, None] * phi[None, :]
        report["example_error"] = float(np.max(np.abs(V.values[:, 0] - ex)))
    write_json(_out(args, "temporal.json"), report, cfg)
    print(f"example error {report.get('example_error', float('nan')):.3e}")
    return EXIT_OK


def cmd_dpg_solve(args, cfg: RunConfig) -> int:
    c = _contour(cfg)
    tg, ag = _grids(cfg, c)
    F = field_corpus(tg, ag, 1, cfg.seed)[0]
    inv = dpg.DPGInverter(c, tg, ag, cfg.contour.backend)
    V = inv.apply(F)
    write_csv(_out(args, "dpg_solution.csv"), FIELD_HEADER, field_rows(V), cfg, field_meta(V))
    dump = dpg.contour_dump(F, c, cfg.contour.backend, cfg.params.p)
    write_csv(_out(args, "contour.csv"), ["s", "re_z", "im_z", "abs_integrand"], dump, cfg)
    report = {"contour": c.as_dict(),
              "discrete_separation": dpg.discrete_separation(c, ag, tg).ok}
    try:
        W = dpg.direct_sum_solve(F, cfg.params.nu)
        report["direct_discrepancy"] = dpg.relative_discrepancy(V, W, cfg.params.p)
    except dpg.SolverError as exc:
        report["direct_discrepancy"] = None
        report["direct_error"] = str(exc)
    write_json(_out(args, "dpg.json"), report, cfg)
    print(f"discrepancy vs direct solve: {report['direct_discrepancy']}")
    return EXIT_OK


def _solve(args, cfg: RunConfig):
    c = _contour(cfg)
    tg, ag = _grids(cfg, c)
    inv = dpg.DPGInverter(c, tg, ag, cfg.contour.backend)
    params = cfg.params
    if args.k is not None:
        params = params.replace(k=args.k)
    if args.rho is not None:
        params = params.replace(rho=args.rho)
    rho_info = None
    if args.rho_auto or (cfg.rho_auto and args.rho is None):
        probes = field_corpus(tg, ag, 5, cfg.seed + 1)
        rho0, q1 = perturbation.estimate_rho0(params.k, params, inv, probes)
        rho_info = {"rho0": rho0, "q1": q1}
        if math.isfinite(rho0):
            params = params.replace(rho=rho0)
    F = field_corpus(tg, ag, 1, cfg.seed)[0]
    sol = perturbation.solve_full(F, params, inv, fp_tol=cfg.tol.fp_tol)
    return params, F, sol, rho_info


def cmd_solve(args, cfg: RunConfig) -> int:
    try:
        params, F, sol, rho_info = _solve(args, cfg)
    except perturbation.DivergenceError as exc:
        write_json(_out(args, "trace.json"), {"error": str(exc), "trace": exc.trace.as_dict()}, cfg)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    V = sol.V
    write_csv(_out(args, "solution.csv"), FIELD_HEADER, field_rows(V), cfg, field_meta(V))
    write_json(_out(args, "trace.json"), {"k": params.k, "rho": params.rho, "rho_auto": rho_info,
                                          "residual": sol.residual, "trace": sol.trace.as_dict()}, cfg)
    reg = perturbation.classical_regularity_check(V, F, params)
    write_json(_out(args, "regularity.json"), reg.as_dict(), cfg)
    radii = params.rho * np.exp(-np.linspace(0.0, V.tgrid.T, args.n_r))
    sf = perturbation.reconstruct_u(V, params, radii)
    write_csv(_out(args, "u.csv"), ["r", "theta", "u"], sf.rows().real, cfg,
              {"trace_value": sf.trace_value, "trace_normal": sf.trace_normal})
    print(f"converged in {sol.trace.iterations} iterations; residual {sol.residual:.3e}; "
          f"regularity {'pass' if reg.passed else 'fail'}")
    return EXIT_OK if reg.passed else EXIT_FAIL


def cmd_reconstruct(args, cfg: RunConfig) -> int:
    V = read_field_csv(args.input)
    params = cfg.params
    radii = params.rho * np.exp(-np.linspace(0.0, V.tgrid.T, args.n_r))
    try:
        sf = perturbation.reconstruct_u(V, params, radii)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    write_csv(_out(args, "u.csv"), ["r", "theta", "u"], sf.rows().real, cfg,
              {"trace_value": sf.trace_value, "trace_normal": sf.trace_normal})
    print(f"u traces: value {sf.trace_value:.3e}, normal derivative {sf.trace_normal:.3e}")
    return EXIT_OK


def cmd_bip_check(args, cfg: RunConfig) -> int:
    grid = bip.xi_grid()
    summary = {}
    rows = []
    for r in args.r:
        sb = bip.sup_bounds(r, grid)
        ex = bip.sup_bounds(r, grid, form="exact")
        summary[repr(r)] = {"closed": sb.as_dict(), "exact": ex.as_dict()}
        sel = grid[grid > 0][:: args.stride]
        for x, m, xm in zip(sel, np.abs(bip.multiplier(sel, r)), np.abs(bip.xi_times_mprime(sel, r))):
            rows.append((r, x, m, xm))
    write_csv(_out(args, "bip.csv"), ["r", "xi", "abs_m", "abs_xi_mprime"], rows, cfg)
    samples = [0.5, 0.3 - 2.0j]
    gam = [s.as_dict() for s in bip.gamma_reflection_check(samples)]
    caveat = (f"suprema are maxima over {grid.size} log-spaced grid points on "
              f"+-[{grid[grid > 0][0]:.0e}, {grid[-1]:.0e}]; larger values between points are not excluded")
    write_json(_out(args, "bip.json"), {"sup_bounds": summary, "gamma": gam, "grid_caveat": caveat}, cfg)
    for r, d in summary.items():
        print(f"r = {r}: sup|m| = {d['closed']['sup_m']:.6f}, sup|xi m'| = {d['closed']['sup_xm']:.6f}, "
              f"sum = {d['closed']['mikhlin_sum']:.6f}")
    print(caveat)
    return EXIT_OK


def cmd_verify(args, cfg: RunConfig) -> int:
    only = args.only or None
    results = []
    for res in acceptance.run_all(only):
        print(res.line())
        results.append(res)
    ok = all(r.passed for r in results)
    write_json(_out(args, "verdict.json"), {"verdict": "pass" if ok else "fail",
                                            "criteria": [r.as_dict() for r in results]}, cfg)
    return EXIT_OK if ok else EXIT_FAIL


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------
def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="conesolve", description=__doc__.splitlines()[0])
    ap.add_argument("--config", help="configuration file (defaults apply when omitted)")
    ap.add_argument("--out", default="conesolve-out", help="output directory")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("roots", help="transcendental roots and tau")
    p.add_argument("--families", nargs="+", default=list(roots.FAMILIES), choices=list(roots.FAMILIES))
    p.add_argument("--box", nargs=4, type=float, metavar=("XMIN", "XMAX", "YMIN", "YMAX"))
    p.set_defaults(func=cmd_roots)

    p = sub.add_parser("eigs", help="angular eigenvalues (sine families) and eps0")
    p.set_defaults(func=cmd_eigs)

    p = sub.add_parser("resolve-angular", help="(A - lambda)^{-1} of a corpus member")
    p.add_argument("--lambda", dest="lam", required=True, help="'re' or 're,im'")
    p.add_argument("--variant", choices=("sine", "omega"), default="sine")
    p.set_defaults(func=cmd_resolve_angular)

    p = sub.add_parser("resolve-temporal", help="(L1 - lambda)^{-1} of e^{-t} phi(theta)")
    p.add_argument("--lambda", dest="lam", required=True)
    p.add_argument("--n-t", type=int, default=2001)
    p.set_defaults(func=cmd_resolve_temporal)

    p = sub.add_parser("dpg-solve", help="contour inverse of L1 + L2 with contour dump")
    p.set_defaults(func=cmd_dpg_solve)

    for name, fn, helptext in (("solve", cmd_solve, "fixed-point solve of the full equation"),):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--k", type=float)
        p.add_argument("--rho", type=float)
        p.add_argument("--rho-auto", action="store_true")
        p.add_argument("--n-r", type=int, default=64)
        p.set_defaults(func=fn)

    p = sub.add_parser("reconstruct", help="u on the sector from a solution CSV")
    p.add_argument("--input", required=True)
    p.add_argument("--n-r", type=int, default=64)
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("bip-check", help="multiplier suprema and Gamma reflection")
    p.add_argument("--r", nargs="+", type=float, default=[0.1, 1.0, 10.0])
    p.add_argument("--stride", type=int, default=100)
    p.set_defaults(func=cmd_bip_check)

    p = sub.add_parser("verify", help="run the acceptance suite")
    p.add_argument("--only", nargs="+", type=int, choices=sorted(acceptance.CRITERIA))
    p.set_defaults(func=cmd_verify)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        with run_lock(args.out):
            return args.func(args, cfg)
    except (UsageError, dpg.ContourError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
