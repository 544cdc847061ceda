"""Desk-scale invariant suites behind ``psbohm verify``.

Each check returns a measured error and its tolerance; a check passes when
the error is finite and at most the tolerance.
"""
from __future__ import annotations

from typing import Callable, NamedTuple

import numpy as np
import sympy as sp

from . import gaussian_oracle as go
from .bohm import (KERNEL_EPS_NODE, bohm_kernel, bohm_map_poly, bohm_measure, characteristic_function,
                   momentum_probability, momentum_stargenfunction, position_probability, state_moments)
from .cohen import eta, expectation_f, kernel_from_expr, to_f_distribution, to_f_symbol, xi
from .dynamics import (PropagatorConfig, bohm_transport_residual, expectation_rate_check, hamiltonian_symbol,
                       heisenberg_expectations, moyal_residual, propagate)
from .madelung import decompose
from .moyal import moyal_star, stargen_residual, stargenfunction_projector
from .operators import hamiltonian
from .states import coherent_state, oscillator_eigenstate
from .transforms import SpatialGrid
from .wigner import (PolySymbol, characteristic_function_grid, expectation_weyl, marginals, p,
                     probability_weyl, wigner_transform, x)

C = go.CoherentStateParams(x0=0.5, p0=0.7)


class Check(NamedTuple):
    suite: str
    name: str
    value: float
    tol: float

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.value) and self.value <= self.tol)


def _grid():
    return SpatialGrid.uniform(-32.0, 32.0, 512)


def _wigner():
    g = _grid()
    psi = coherent_state(g, x0=C.x0, p0=C.p0)
    F = wigner_transform(psi)
    xm, pm = np.meshgrid(g.points(), F.pgrid.points(), indexing="ij")
    mx, mp = marginals(F)
    F1 = wigner_transform(oscillator_eigenstate(g, 1))
    return [
        ("coherent_oracle", float(np.max(np.abs(F.samples - go.oracle_wigner(C, xm, pm)))), 1e-8),
        ("position_marginal", float(np.max(np.abs(mx - go.oracle_density(C, g.points())))), 1e-8),
        ("momentum_marginal", float(np.max(np.abs(mp - go.oracle_momentum_probability(C, F.pgrid.points())))), 1e-8),
        ("normalization", abs(float(np.real(F.integral())) - 1.0), 1e-10),
        ("excited_negativity", float(F1.samples.real.min() >= 0), 0.0),
    ]


def _moyal():
    g = SpatialGrid.uniform(-16.0, 16.0, 128)
    comm = moyal_star(PolySymbol(x), PolySymbol(p)).expr - moyal_star(PolySymbol(p), PolySymbol(x)).expr
    H = PolySymbol(p**2 / 2 + x**2 / 2)
    G = stargenfunction_projector([hamiltonian(g.points() ** 2 / 2)], oscillator_eigenstate(g, 0), [0.5])
    psi = coherent_state(g, x0=0.3, p0=-0.4, dx=0.8)
    F = wigner_transform(psi, G.symbol.pgrid)
    mean = probability_weyl(F, moyal_star(H, G.symbol)).raw - 0.5 * probability_weyl(F, G.symbol).raw
    return [
        ("canonical_commutator", float(abs(complex(sp.expand(comm - sp.I)))), 1e-14),
        ("ground_stargen_residual", stargen_residual(H, G), 1e-6),
        ("star_delta_mean", abs(mean), 1e-6),
    ]


def _cohen():
    g = SpatialGrid.uniform(-20.0, 20.0, 256)
    psi = coherent_state(g, x0=0.4, p0=-0.3, dx=0.9)
    F = wigner_transform(psi)
    k = kernel_from_expr(sp.exp(-(xi**2 + eta**2) / 8 + sp.I * xi * eta / 10), g, F.pgrid)
    Ff = to_f_distribution(F, k)
    worst = 0.0
    for A in (x, p, x**2, x * p, p**2):
        S = PolySymbol(A)
        worst = max(worst, abs(expectation_f(Ff, to_f_symbol(S, k)) - expectation_weyl(F, S)))
    hus = kernel_from_expr(sp.exp(-(xi**2 + eta**2) / 4), g, F.pgrid)
    return [
        ("kernel_independence", worst, 1e-6),
        ("husimi_positivity", max(0.0, -float(to_f_distribution(F, hus).samples.real.min())), 1e-12),
        ("normalization", abs(float(np.real(Ff.integral())) - 1.0), 1e-10),
    ]


def _bohm():
    g = _grid()
    psi = coherent_state(g, x0=C.x0, p0=C.p0)
    k = bohm_kernel(psi)
    m = bohm_measure(decompose(psi, eps_node=KERNEL_EPS_NODE))
    ok = ~k.mask
    f0 = go.oracle_kernel(C, k.xi[:, None], k.eta[None, :])
    F = wigner_transform(psi, k.pgrid)
    chi_w = characteristic_function_grid(F)
    idx = np.argwhere(ok)
    sel = idx[np.random.default_rng(0).choice(len(idx), 64, replace=False)]
    chi_b = characteristic_function(m, k.xi[sel[:, 0]], k.eta[sel[:, 1]])
    rec = np.max(np.abs(chi_b - k.samples[sel[:, 0], sel[:, 1]] * chi_w[sel[:, 0], sel[:, 1]]))
    th = momentum_stargenfunction(k, 0.3)
    mp = momentum_probability(m, k)
    shift = float((bohm_map_poly(PolySymbol(p**2 / 2), state_moments(psi)).expr - p**2 / 2).expand())
    return [
        ("coherent_kernel", float(np.max(np.abs(k.samples - f0)[ok] / np.abs(f0[ok]))), 1e-6),
        ("recovery_identity", float(rec), 1e-6),
        ("momentum_stargen", float(np.max(np.abs(th - go.oracle_momentum_stargen(C, k.pgrid.points(), 0.3)))), 1e-6),
        ("momentum_probability", float(np.max(np.abs(mp.P1 - go.oracle_momentum_probability(C, mp.p)))), 1e-6),
        ("position_probability", float(np.max(np.abs(position_probability(m) - np.abs(psi.samples) ** 2))), 1e-8),
        ("kinetic_shift", abs(shift - go.oracle_mean_quantum_potential(C)), 1e-8),
    ]


def _dynamics():
    g = SpatialGrid.uniform(-20.0, 20.0, 256)
    V = g.points() ** 2 / 2
    H = hamiltonian_symbol(x**2 / 2)
    psi = coherent_state(g, x0=C.x0, p0=C.p0)
    moy, tra = [], []
    for dt in (0.01, 0.005):
        n = int(round(0.2 / dt))
        s = propagate(psi, PropagatorConfig(dt, n + 1, V))
        moy.append(moyal_residual([wigner_transform(s[i]) for i in (n - 1, n, n + 1)], H, dt))
        tra.append(bohm_transport_residual([decompose(s[i], eps_node=KERNEL_EPS_NODE)
                                            for i in (n - 1, n, n + 1)], dt, V))
    gb = _grid()
    pb = coherent_state(gb, x0=C.x0, p0=C.p0)
    k = bohm_kernel(pb)
    m0 = bohm_measure(decompose(pb, eps_node=KERNEL_EPS_NODE))
    T, n = np.pi / 2, 3142
    s = propagate(pb, PropagatorConfig(T / n, n, gb.points() ** 2 / 2, record_every=n))
    heis = heisenberg_expectations(PolySymbol(x), k, H, m0, s.times)
    schr = [expectation_weyl(wigner_transform(st), PolySymbol(x)) for st in s.states]
    lhs, rhs = expectation_rate_check(PolySymbol(p), C, x**2 / 2)
    return [
        ("moyal_order", abs(moy[0] / moy[1] - 4.0), 0.8),
        ("transport_order", abs(tra[0] / tra[1] - 4.0), 0.8),
        ("picture_equivalence", float(np.max(np.abs(heis - np.array(schr)))), 1e-6),
        ("expectation_rate", abs(lhs - rhs), 1e-6),
    ]


SUITES: dict[str, Callable[[], list]] = {
    "wigner": _wigner, "moyal": _moyal, "cohen": _cohen, "bohm": _bohm, "dynamics": _dynamics,
}


def run_suite(name: str) -> list[Check]:
    names = list(SUITES) if name == "all" else [name]
    out = []
    for n in names:
        try:
            rows = SUITES[n]()
        except Exception as exc:  # reported as a failed check, not a crash
            out.append(Check(n, f"error:{type(exc).__name__}", float("inf"), 0.0))
            continue
        out.extend(Check(n, *r) for r in rows)
    return out
