"""Time evolution: split-step propagation, Moyal and Bohm-transport residuals,
and Heisenberg-picture evolution of Bohm symbols under a frozen kernel."""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations_with_replacement
from typing import Sequence

import numpy as np
import sympy as sp
from scipy.linalg import expm

from .bohm import BohmMeasure, bohm_map_poly, bohm_measure, expectation_bohm, state_moments
from .cohen import CohenKernel, from_f_symbol, to_f_symbol
from .errors import GridError, MaskError, ScopeError, SupportError
from .gaussian_oracle import CoherentStateParams, oracle_psi
from .madelung import MadelungFields, decompose, quantum_potential_gradient_weighted
from .moyal import moyal_bracket
from .transforms import PhaseSpaceFunction, SpatialGrid, WaveFunction, check_support, spectral_derivative
from .wigner import PolySymbol, expectation_weyl, wigner_transform

SCHEME = "strang-split-spectral-2"
MAX_TRANSPORT_MASKED_MASS = 1e-6


@dataclass(frozen=True)
class PropagatorConfig:
    dt: float
    steps: int
    potential: np.ndarray
    record_every: int = 1
    scheme: str = SCHEME

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.steps < 0 or self.record_every < 1:
            raise ValueError("steps must be >= 0 and record_every >= 1")
        if self.scheme != SCHEME:
            raise ValueError(f"unknown scheme {self.scheme!r}")
        object.__setattr__(self, "potential", np.asarray(self.potential, dtype=float))

    def check_stability(self, grid: SpatialGrid, hbar: float, mass: float) -> float:
        """dt times the largest kinetic phase rate; must stay below pi."""
        kmax2 = sum(float(np.max(a.wavenumbers() ** 2)) for a in grid.axes)
        phase = self.dt * hbar * kmax2 / (2.0 * mass)
        if phase >= np.pi:
            raise GridError(f"dt * max kinetic phase = {phase:.3g} >= pi; reduce dt")
        return phase


@dataclass(frozen=True)
class TimeSeries:
    times: np.ndarray
    states: tuple[WaveFunction, ...]

    def __len__(self):
        return len(self.states)

    def __getitem__(self, i):
        return self.states[i]


def propagate(psi: WaveFunction, cfg: PropagatorConfig) -> TimeSeries:
    """Strang splitting exp(-iV dt/2) exp(-iT dt) exp(-iV dt/2), spectral kinetic step."""
    grid, hbar, m = psi.grid, psi.hbar, psi.mass
    if cfg.potential.shape != grid.shape:
        raise GridError("potential does not match the wave-function grid")
    cfg.check_stability(grid, hbar, m)
    k2 = sum(np.meshgrid(*[a.wavenumbers() ** 2 for a in grid.axes], indexing="ij"))
    kin = np.exp(-1j * cfg.dt * hbar * k2 / (2.0 * m))
    half = np.exp(-0.5j * cfg.dt * cfg.potential / hbar)
    axes = tuple(range(grid.dims))
    w = np.asarray(psi.samples, dtype=complex)
    check_support(w)
    states, times = [psi], [0.0]
    for n in range(1, cfg.steps + 1):
        w = half * np.fft.ifftn(kin * np.fft.fftn(half * w, axes=axes), axes=axes)
        try:
            check_support(w)
        except SupportError as exc:
            raise SupportError(f"step {n}: {exc}") from exc
        if n % cfg.record_every == 0 or n == cfg.steps:
            states.append(psi.with_samples(w.copy()))
            times.append(n * cfg.dt)
    return TimeSeries(np.array(times), tuple(states))


def hamiltonian_symbol(V: sp.Expr = 0, mass: float = 1.0, hbar: float = 1.0, dims: int = 1) -> PolySymbol:
    """p^2 / 2m + V(x) as a polynomial symbol."""
    ps = PolySymbol(0, dims, hbar).ps
    return PolySymbol(sum(q**2 for q in ps) / (2 * sp.nsimplify(mass)) + sp.sympify(V), dims, hbar)


def _l2(a: np.ndarray, dv: float) -> float:
    return float(np.sqrt(np.sum(np.abs(a) ** 2) * dv))


def moyal_residual(series: Sequence[PhaseSpaceFunction], H: PolySymbol, dt: float,
                   index: int | None = None) -> float:
    """||dF/dt - (1/i hbar)[H, F]_M||_2 at ``index`` with a centred time difference."""
    i = len(series) // 2 if index is None else index
    if not 0 < i < len(series) - 1:
        raise ValueError("the residual needs a neighbour on each side")
    Fm, F0, Fp = series[i - 1], series[i], series[i + 1]
    dF = (Fp.samples - Fm.samples) / (2.0 * dt)
    rhs = moyal_bracket(H, F0).samples / (1j * F0.hbar)
    return _l2(dF - rhs, F0.volume_element)


def default_transport_samples(count: int = 8, span: float = 2.0) -> tuple[np.ndarray, np.ndarray]:
    s = np.linspace(-span, span, count)
    xi, eta = np.meshgrid(s, s, indexing="ij")
    return xi.ravel(), eta.ravel()


def _check_transport_mask(fields: MadelungFields) -> None:
    if fields.masked_mass > MAX_TRANSPORT_MASKED_MASS:
        raise MaskError(f"node mask holds {fields.masked_mass:.3e} of the probability",
                        occupancy=fields.masked_mass)


def _bohm_chi(fields: MadelungFields, xi, eta) -> np.ndarray:
    ok = ~fields.node_mask.ravel()
    x = fields.grid.points()[ok]
    w = fields.density.ravel()[ok] * fields.grid.volume_element
    ph = np.multiply.outer(xi, x) + np.multiply.outer(eta, fields.gradS[0].ravel()[ok])
    return np.exp(1j * ph) @ w


def bohm_transport_residual(series: Sequence[MadelungFields], dt: float, V: np.ndarray,
                            xi=None, eta=None, index: int | None = None) -> float:
    """Transport equation dF/dt = {H + Q, F}_P in the characteristic domain (1D).

    Both sides are paired with exp(i xi x + i eta p):
    d chi / dt  versus  sum_i w_i e^(...) (i xi p_i / m - i eta d(V + Q)(x_i)).
    Returns the largest absolute difference over the (xi, eta) samples.
    """
    i = len(series) // 2 if index is None else index
    if not 0 < i < len(series) - 1:
        raise ValueError("the residual needs a neighbour on each side")
    F = series[i]
    if F.grid.dims != 1:
        raise ScopeError("transport residuals are one-dimensional")
    for s in (series[i - 1], F, series[i + 1]):
        _check_transport_mask(s)
    if xi is None:
        xi, eta = default_transport_samples()
    xi, eta = np.asarray(xi, dtype=float), np.asarray(eta, dtype=float)
    lhs = (_bohm_chi(series[i + 1], xi, eta) - _bohm_chi(series[i - 1], xi, eta)) / (2.0 * dt)
    ok = ~F.node_mask
    g, m = F.grid, F.mass
    x = g.points()[ok]
    dv = g.volume_element
    P = F.density[ok]
    pS = F.gradS[0][ok]
    force = P * spectral_derivative(np.asarray(V, dtype=float), g)[ok] + quantum_potential_gradient_weighted(F)[0][ok]
    e = np.exp(1j * (np.multiply.outer(xi, x) + np.multiply.outer(eta, pS)))
    rhs = 1j * xi * (e @ (P * pS * dv)) / m - 1j * eta * (e @ (force * dv))
    return float(np.max(np.abs(lhs - rhs)))


# ---------------------------------------------------------------- Heisenberg picture


def _basis(A: PolySymbol) -> list[sp.Expr]:
    """Monomials of total degree <= 2 in positions and momenta."""
    syms = A.xs + A.ps
    out = [sp.Integer(1)] + list(syms)
    out += [a * b for a, b in combinations_with_replacement(syms, 2)]
    return out


def _coefficients(expr: sp.Expr, basis: list[sp.Expr], syms) -> np.ndarray:
    poly = sp.Poly(sp.expand(expr), *syms)
    if poly.total_degree() > 2:
        raise ScopeError("symbol degree grew beyond 2; the exact Heisenberg regime ends here")
    terms = dict(zip([sp.Poly(b, *syms).monoms()[0] for b in basis], range(len(basis))))
    c = np.zeros(len(basis), dtype=complex)
    for mono, coef in poly.terms():
        c[terms[mono]] = complex(coef)
    return c


def heisenberg_generator(k: CohenKernel, H: PolySymbol, like: PolySymbol) -> tuple[np.ndarray, list[sp.Expr]]:
    """Matrix of A_B -> f^-1 (1/i hbar)[f A_B, H_W]_M on the degree-2 monomial basis."""
    if H.x_degree() is None or H.x_degree() > 2 or H.p_degree() > 2:
        raise ScopeError("the exact Heisenberg regime needs a polynomial H of degree <= 2")
    basis = _basis(like)
    syms = like.xs + like.ps
    cols = []
    for b in basis:
        AW = from_f_symbol(like.like(b), k)
        br = moyal_bracket(AW, H)
        rate = to_f_symbol(br.like(sp.expand(br.expr / (sp.I * sp.Float(H.hbar)))), k)
        cols.append(_coefficients(rate.expr, basis, syms))
    return np.array(cols).T, basis


def evolve_bohm_symbol(A: PolySymbol, k: CohenKernel, H: PolySymbol,
                       t_grid: Sequence[float]) -> list[PolySymbol]:
    """Solve dA_B/dt = f^-1 (1/i hbar)[A_W, H_W]_M exactly for quadratic H (kernel frozen).

    ``A`` is the Weyl symbol of the observable at t = 0; the series holds the
    f-symbols A_B(t) for ``t_grid``.
    """
    d = A.x_degree()
    if d is None or sp.Poly(A.expr, *(A.xs + A.ps)).total_degree() > 2:
        raise ScopeError("Heisenberg evolution is exact only for symbols of degree <= 2")
    M, basis = heisenberg_generator(k, H, A)
    c0 = _coefficients(to_f_symbol(A, k).expr, basis, A.xs + A.ps)
    out = []
    for t in t_grid:
        c = expm(M * float(t)) @ c0
        if np.max(np.abs(c.imag)) < 1e-12 * max(1.0, np.max(np.abs(c.real))):
            c = c.real
        expr = sum((_num(ci) * b for ci, b in zip(c, basis)), sp.Integer(0))
        out.append(A.like(sp.expand(expr)))
    return out


def _num(c) -> sp.Expr:
    c = complex(c)
    return sp.Float(c.real) if c.imag == 0 else sp.Float(c.real) + sp.I * sp.Float(c.imag)


def heisenberg_expectations(A: PolySymbol, k: CohenKernel, H: PolySymbol, m0: BohmMeasure,
                            t_grid: Sequence[float]) -> np.ndarray:
    """<A>(t) from Bohm symbols evolved against the frozen t = 0 measure."""
    return np.array([expectation_bohm(m0, s) for s in evolve_bohm_symbol(A, k, H, t_grid)])


def rate_rhs(AB: PolySymbol, H: PolySymbol, fields: MadelungFields) -> float:
    """Pairing of the Bohm measure with (1/i hbar)[A_B, H_W + Q]_M.

    For momentum degree <= 2 the bracket with Q(x) terminates at first order,
    so the Q part is -dA_B/dp dQ/dx, paired with the division-free R^2 dQ/dx.
    """
    if AB.dims != 1:
        raise ScopeError("rate check is one-dimensional")
    br = moyal_bracket(AB, H)
    rate = br.like(sp.expand(br.expr / (sp.I * sp.Float(AB.hbar))))
    m = bohm_measure(fields)
    part_h = expectation_bohm(m, rate)
    dA = AB.like(sp.diff(AB.expr, AB.ps[0]))
    vals = np.real(dA.evaluate([m.positions[:, 0]], [m.momenta[:, 0]]))
    PdQ = quantum_potential_gradient_weighted(fields)[0].ravel()[m.nodes]
    part_q = -float(np.sum(vals * PdQ) * fields.grid.volume_element)
    return float(np.real(part_h)) + part_q


def expectation_rate_check(A: PolySymbol, c: CoherentStateParams, V: sp.Expr = 0, grid: SpatialGrid | None = None,
                           dt: float = 1e-3, eps_node: float = 1e-24) -> tuple[float, float]:
    """(lhs, rhs) of d<A>/dt = <(1/i hbar)[A_B, H_W + Q]_M>_B for a coherent state at t = 0.

    lhs differences Schrodinger-picture expectations at -dt and +dt (propagated
    backwards by conjugation); rhs pairs the Bohm measure with the bracket.
    """
    if grid is None:
        grid = SpatialGrid.uniform(c.x0 - 24.0 * c.dx, c.x0 + 24.0 * c.dx, 512)
    psi = WaveFunction(grid, oracle_psi(c, grid.points()), c.hbar, c.mass).normalize()
    H = hamiltonian_symbol(V, c.mass, c.hbar)
    Vg = np.real(PolySymbol(sp.sympify(V), 1, c.hbar).evaluate([grid.points()], [0.0 * grid.points()]))
    cfg = PropagatorConfig(dt, 1, Vg)
    fwd = propagate(psi, cfg)[1]
    # time reversal: psi(-dt) = conj(U(dt) conj(psi)) for a real potential
    back = propagate(psi.with_samples(np.conj(psi.samples)), cfg)[1]
    back = back.with_samples(np.conj(back.samples))
    ex = [expectation_weyl(wigner_transform(s), A) for s in (back, fwd)]
    lhs = (ex[1] - ex[0]) / (2.0 * dt)
    AB = bohm_map_poly(A, state_moments(psi))
    rhs = rate_rhs(AB, H, decompose(psi, eps_node=eps_node))
    return float(lhs), float(rhs)
