"""``psbohm`` command line: wigner, bohm, verify, evolve.

Exit codes: 0 success, 1 invalid spec, 2 numerical check failure, 3 kernel
mask occupancy above threshold, 64 usage error; ``verify`` exits with the
number of failed checks (capped at 63).
"""
from __future__ import annotations

import argparse
import hashlib
import sys
from pathlib import Path

import numpy as np
import sympy as sp

from . import __version__
from . import gaussian_oracle as go
from .bohm import (KERNEL_EPS_NODE, bohm_kernel, bohm_map_poly, bohm_measure, momentum_probability,
                   position_probability, state_moments)
from .cohen import MASK_TOLERANCE
from .dynamics import (PropagatorConfig, hamiltonian_symbol, heisenberg_expectations, propagate, rate_rhs)
from .errors import MaskError, PSBohmError, ScopeError
from .madelung import decompose
from .specfile import SpecError, StateSpec, load_spec
from .transforms import SpatialGrid, forward_fourier
from .verify import SUITES, run_suite
from .wigner import X, P, PolySymbol, characteristic_function_grid, expectation_weyl, marginals, wigner_transform

EXIT_SPEC, EXIT_NUMERIC, EXIT_MASK, EXIT_USAGE = 1, 2, 3, 64
CONVENTION = "W(k)=(2pi)^-1/2*int(w*exp(-ikx)dx);F=(1/2pi)int(K*exp(-ipy)dy);chi=int(F*exp(i(xi*x+eta*p)))"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"psbohm: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _fmt(v) -> str:
    return "%.17g" % v


def write_csv(path, header, columns) -> None:
    cols = [np.ravel(np.asarray(c, dtype=float)) for c in columns]
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in zip(*cols):
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def fingerprint(xgrid: SpatialGrid, pgrid: SpatialGrid | None, hbar: float) -> str:
    text = f"{CONVENTION}|x:{xgrid.fingerprint()}|p:{pgrid.fingerprint() if pgrid else '-'}|hbar:{hbar:.17g}"
    return hashlib.sha256(text.encode()).hexdigest()[:16]


class Summary:
    def __init__(self):
        self.items: list[tuple[str, str]] = []

    def add(self, key, value):
        if isinstance(value, (float, np.floating)):
            value = _fmt(value)
        self.items.append((key, str(value)))

    def text(self) -> str:
        return "".join(f"{k}={v}\n" for k, v in self.items)

    def emit(self, sidecar: Path | None = None):
        sys.stdout.write(self.text())
        if sidecar is not None:
            sidecar.write_text(self.text())


def _conventions(s: Summary, spec: StateSpec, xgrid, pgrid):
    s.add("VERSION", __version__)
    s.add("CONVENTION", CONVENTION)
    s.add("XGRID", xgrid.fingerprint())
    s.add("PGRID", pgrid.fingerprint())
    s.add("HBAR", spec.hbar)
    s.add("MASS", spec.mass)
    s.add("FINGERPRINT", fingerprint(xgrid, pgrid, spec.hbar))


def _coherent_params(spec: StateSpec):
    if spec.kind != "coherent":
        return None
    return go.CoherentStateParams(spec.param("x0"), spec.param("p0"), spec.param("dx"), spec.hbar, spec.mass)


def _mesh(F):
    return np.meshgrid(F.xgrid.points(), F.pgrid.points(), indexing="ij")


def cmd_wigner(spec: StateSpec, out: Path) -> int:
    psi = spec.build()
    F = wigner_transform(psi)
    xm, pm = _mesh(F)
    write_csv(out, ["x", "p", "value"], [xm, pm, F.samples.real])
    s = Summary()
    _conventions(s, spec, F.xgrid, F.pgrid)
    mx, mp = marginals(F)
    dens = np.abs(psi.samples) ** 2
    # the default momentum grid is hbar times the dual wavenumber grid
    mom = np.abs(forward_fourier(psi.samples, psi.grid.axes[0])) ** 2 / psi.hbar
    ex = float(np.max(np.abs(mx - dens)))
    ep = float(np.max(np.abs(mp - mom)))
    norm = float(np.real(F.integral()))
    imax = np.unravel_index(np.argmax(F.samples.real), F.samples.shape)
    s.add("NORMALIZATION", norm)
    s.add("MIN_VALUE", float(F.samples.real.min()))
    s.add("MAX_VALUE", float(F.samples.real.max()))
    s.add("MAX_AT_X", float(xm[imax]))
    s.add("MAX_AT_P", float(pm[imax]))
    s.add("MARGINAL_X_ERROR", ex)
    s.add("MARGINAL_P_ERROR", ep)
    ok = ex < 1e-8 and ep < 1e-8 and abs(norm - 1.0) < 1e-8
    s.add("MARGINAL_CHECK", "PASS" if ok else "FAIL")
    s.emit(Path(str(out) + ".summary"))
    return 0 if ok else EXIT_NUMERIC


def _spectral_occupancy(k, chi):
    e = np.abs(chi) ** 2
    return float(e[k.mask].sum() / e.sum())


def cmd_bohm(spec: StateSpec, what: str, out: Path) -> int:
    psi = spec.build()
    k = bohm_kernel(psi)
    fields = decompose(psi, eps_node=KERNEL_EPS_NODE)
    m = bohm_measure(fields)
    chi = characteristic_function_grid(wigner_transform(psi, k.pgrid))
    s = Summary()
    _conventions(s, spec, psi.grid, k.pgrid)
    occ = _spectral_occupancy(k, chi)
    s.add("KERNEL_MASKED_FRACTION", k.masked_fraction)
    s.add("KERNEL_INVERSE_MASKED_FRACTION", k.inverse_masked_fraction)
    s.add("KERNEL_MASK_OCCUPANCY", occ)
    s.add("XI_VARIATION", k.info["xi_variation"])
    s.add("XI_VARIATION_POINTWISE", k.info["xi_variation_pointwise"])
    s.add("NODE_MASKED_MASS", fields.masked_mass)
    c = _coherent_params(spec)
    status = 0
    if c is not None:
        f0 = go.oracle_kernel(c, k.xi[:, None], k.eta[None, :])
        ok = ~k.mask
        err = float(np.max(np.abs(k.samples - f0)[ok] / np.abs(f0[ok])))
        s.add("KERNEL_ORACLE_REL_ERROR", err)
        if err > 1e-6:
            status = EXIT_NUMERIC
    sidecar = Path(str(out) + ".summary")
    if occ > MASK_TOLERANCE:
        s.add("STATUS", "MASK_OCCUPANCY")
        s.emit(sidecar)
        return EXIT_MASK
    if what == "kernel":
        XI, ETA = np.meshgrid(k.xi, k.eta, indexing="ij")
        write_csv(out, ["xi", "eta", "re", "im", "masked"],
                  [XI, ETA, k.samples.real, k.samples.imag, k.mask.astype(float)])
    elif what == "measure":
        write_csv(out, ["x", "weight", "momentum"], [m.positions[:, 0], m.weights, m.momenta[:, 0]])
        s.add("TOTAL_WEIGHT", m.total_weight)
    elif what == "prob-x":
        P1 = position_probability(m)
        R2 = np.abs(psi.samples) ** 2
        err = float(np.max(np.abs(P1 - R2)))
        write_csv(out, ["x", "P1", "R2"], [psi.grid.points(), P1, R2])
        s.add("PROB_X_MAX_ERROR", err)
        if err > 1e-8:
            status = EXIT_NUMERIC
    else:
        try:
            mp = momentum_probability(m, k)
        except ScopeError as exc:
            s.add("STATUS", f"SCOPE:{exc}")
            s.emit(sidecar)
            return EXIT_NUMERIC
        marg = marginals(wigner_transform(psi, k.pgrid))[1]
        cols, head = [mp.p, mp.P1, marg], ["p", "P1", "wigner_marginal"]
        err = float(np.max(np.abs(mp.P1 - marg)))
        s.add("PROB_P_MARGINAL_ERROR", err)
        if c is not None:
            orc = go.oracle_momentum_probability(c, mp.p)
            cols.append(orc)
            head.append("oracle")
            err = max(err, float(np.max(np.abs(mp.P1 - orc))))
            s.add("PROB_P_ORACLE_ERROR", float(np.max(np.abs(mp.P1 - orc))))
        write_csv(out, head, cols)
        if err > 1e-6:
            status = EXIT_NUMERIC
    s.add("STATUS", "PASS" if status == 0 else "FAIL")
    s.emit(sidecar)
    return status


def cmd_verify(suite: str) -> int:
    if suite != "all" and suite not in SUITES:
        print(f"psbohm: unknown suite {suite!r}; choose from {', '.join([*SUITES, 'all'])}", file=sys.stderr)
        return EXIT_USAGE
    checks = run_suite(suite)
    print("suite,check,value,tolerance,status")
    for c in checks:
        print(f"{c.suite},{c.name},{_fmt(c.value)},{_fmt(c.tol)},{'PASS' if c.passed else 'FAIL'}")
    return min(sum(not c.passed for c in checks), 63)


def _sym(text: str) -> sp.Expr:
    names = {"x": X[0], "p": P[0], "px": P[0]}
    try:
        return sp.sympify(text, locals=names)
    except (sp.SympifyError, SyntaxError, TypeError) as exc:
        raise UsageError(f"cannot parse expression {text!r}") from exc


def cmd_evolve(spec: StateSpec, potential: str, dt: float, steps: int, observables: list[str],
               out: Path, record: int | None = None, tol: float = 1e-6) -> int:
    psi = spec.build()
    g = psi.grid
    V = _sym(potential)
    if V.free_symbols - {X[0]}:
        raise UsageError("the potential may depend on x only")
    Vg = np.broadcast_to(np.asarray(sp.lambdify(X[0], V, "numpy")(g.points()), dtype=float), g.shape).copy()
    H = hamiltonian_symbol(V, spec.mass, spec.hbar)
    obs = [PolySymbol(_sym(o), 1, spec.hbar) for o in observables]
    record = record or max(1, steps // 20)
    cfg = PropagatorConfig(dt, steps, Vg, record_every=record)
    series = propagate(psi, cfg)
    one = PropagatorConfig(dt, 1, Vg)
    k = bohm_kernel(psi)
    m0 = bohm_measure(decompose(psi, eps_node=KERNEL_EPS_NODE))
    s = Summary()
    _conventions(s, spec, g, k.pgrid)
    s.add("SCHEME", cfg.scheme)
    s.add("DT", dt)
    s.add("STEPS", steps)
    s.add("KINETIC_PHASE", cfg.check_stability(g, spec.hbar, spec.mass))
    header, cols = ["t"], [series.times]
    worst = 0.0
    heis_ok = True
    for name, A in zip(observables, obs):
        schr = np.array([expectation_weyl(wigner_transform(st), A) for st in series.states])
        try:
            heis = heisenberg_expectations(A, k, H, m0, series.times)
        except ScopeError:
            heis = np.full(len(series), np.nan)
            heis_ok = False
        lhs, rhs = [], []
        for st in series.states:
            fwd = propagate(st, one)[1]
            back = propagate(st.with_samples(np.conj(st.samples)), one)[1]
            back = back.with_samples(np.conj(back.samples))
            ea = [expectation_weyl(wigner_transform(w), A) for w in (back, fwd)]
            lhs.append((ea[1] - ea[0]) / (2 * dt))
            try:
                AB = bohm_map_poly(A, state_moments(st))
                rhs.append(rate_rhs(AB, H, decompose(st, eps_node=KERNEL_EPS_NODE)))
            except ScopeError:
                rhs.append(np.nan)
        header += [f"schrodinger[{name}]", f"heisenberg[{name}]", f"rate_lhs[{name}]", f"rate_rhs[{name}]"]
        cols += [schr, heis, lhs, rhs]
        if np.all(np.isfinite(heis)):
            worst = max(worst, float(np.max(np.abs(heis - schr))))
    write_csv(out, header, cols)
    s.add("HEISENBERG", "COMPUTED" if heis_ok else "SKIPPED_OUT_OF_SCOPE")
    s.add("PICTURE_MAX_DIFF", worst)
    status = 0 if worst <= tol else EXIT_NUMERIC
    s.add("STATUS", "PASS" if status == 0 else "FAIL")
    s.emit(Path(str(out) + ".summary"))
    return status


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="psbohm", description="Phase-space quasi-distributions and the Bohm kernel.")
    ap.add_argument("--version", action="version", version=f"psbohm {__version__}")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)
    w = sub.add_parser("wigner", help="Wigner function of a state spec as CSV")
    w.add_argument("--spec", required=True)
    w.add_argument("--out", required=True)
    b = sub.add_parser("bohm", help="Bohm kernel, measure or probabilities as CSV")
    b.add_argument("what", choices=["kernel", "measure", "prob-p", "prob-x"])
    b.add_argument("--spec", required=True)
    b.add_argument("--out", required=True)
    v = sub.add_parser("verify", help="run an invariant suite")
    v.add_argument("--suite", default="all")
    e = sub.add_parser("evolve", help="time series of expectations in both pictures")
    e.add_argument("--spec", required=True)
    e.add_argument("--out", required=True)
    e.add_argument("--potential", default="x**2/2")
    e.add_argument("--dt", type=float, default=1e-3)
    e.add_argument("--steps", type=int, default=1000)
    e.add_argument("--record", type=int, default=None, help="record every N steps")
    e.add_argument("--observables", default="x,p")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "verify":
            return cmd_verify(args.suite)
        spec = load_spec(args.spec)
        if args.command == "wigner":
            return cmd_wigner(spec, Path(args.out))
        if args.command == "bohm":
            return cmd_bohm(spec, args.what, Path(args.out))
        obs = [o.strip() for o in args.observables.split(",") if o.strip()]
        return cmd_evolve(spec, args.potential, args.dt, args.steps, obs, Path(args.out), args.record)
    except SpecError as exc:
        print(f"psbohm: invalid spec: {exc}", file=sys.stderr)
        return EXIT_SPEC
    except UsageError as exc:
        print(f"psbohm: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except MaskError as exc:
        print(f"psbohm: mask: {exc}", file=sys.stderr)
        return EXIT_MASK
    except (PSBohmError, ValueError) as exc:
        print(f"psbohm: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    raise SystemExit(main())
