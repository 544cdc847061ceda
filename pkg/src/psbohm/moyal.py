"""Moyal star product, Moyal bracket and stargenfunctions built from projectors."""
from __future__ import annotations

from dataclasses import dataclass
from math import comb, factorial
from typing import Sequence

import numpy as np
import sympy as sp

from .errors import GridError, PSBohmError, ScopeError
from .operators import Applier, eigen_residual
from .transforms import (SQRT_2PI, PhaseSpaceFunction, SpatialGrid, WaveFunction, forward_fourier,
                         inverse_fourier, shift_samples, spectral_derivative)
from .wigner import PolySymbol, WeylSymbol, weyl_symbol

MAX_COMBINED_P_DEGREE = 4


def _check_hbar(A, B) -> float:
    if not np.isclose(A.hbar, B.hbar, rtol=1e-12):
        raise ValueError(f"operands carry different hbar ({A.hbar} vs {B.hbar})")
    return float(A.hbar)


def _star_poly(A: PolySymbol, B: PolySymbol) -> PolySymbol:
    if A.dims != B.dims:
        raise ScopeError("operands live in different dimensions")
    if A.p_degree() + B.p_degree() > MAX_COMBINED_P_DEGREE:
        raise ScopeError("combined momentum degree exceeds 4")
    hbar = _check_hbar(A, B)
    d = A.dims
    x1 = sp.symbols(f"_xa0:{d}", real=True)
    p1 = sp.symbols(f"_pa0:{d}", real=True)
    x2 = sp.symbols(f"_xb0:{d}", real=True)
    p2 = sp.symbols(f"_pb0:{d}", real=True)
    a = A.expr.subs(dict(zip(A.xs + A.ps, x1 + p1)), simultaneous=True)
    b = B.expr.subs(dict(zip(B.xs + B.ps, x2 + p2)), simultaneous=True)
    term = sp.expand(a * b)
    total = term
    n = 0
    # every application of J removes one momentum derivative, so this ends
    while term != 0:
        n += 1
        term = sp.expand(sum(sp.diff(term, x1[i], p2[i]) - sp.diff(term, p1[i], x2[i])
                             for i in range(d)) / n)
        total += (sp.I * hbar / 2) ** n * term
    back = dict(zip(x1 + p1 + x2 + p2, A.xs + A.ps + A.xs + A.ps))
    return PolySymbol(sp.expand(total.subs(back, simultaneous=True)), d, hbar,
                      max_p_degree=MAX_COMBINED_P_DEGREE)


class _GridDerivatives:
    """Cache of spectral derivatives d_x^a d_p^b of a phase-space array."""

    def __init__(self, F: PhaseSpaceFunction):
        self.F = F
        self.grid = SpatialGrid(F.xgrid.axes + F.pgrid.axes)
        self.cache = {(0, 0): F.samples}

    def __call__(self, a: int, b: int) -> np.ndarray:
        key = (a, b)
        if key not in self.cache:
            base = self(a, b - 1) if b > 0 else self(a - 1, 0)
            axis = 1 if b > 0 else 0
            self.cache[key] = spectral_derivative(base, self.grid, axis=axis)
        return self.cache[key]


def _bopp(P: PolySymbol, G: PhaseSpaceFunction, poly_left: bool) -> PhaseSpaceFunction:
    """P * G (or G * P) by the terminating differential series."""
    if P.dims != 1 or G.xgrid.dims != 1:
        raise ScopeError("grid star products are one-dimensional")
    xdeg = P.x_degree()
    if xdeg is None:
        raise ScopeError("polynomial operand must be polynomial in x for a grid product")
    hbar = _check_hbar(P, G)
    xs, ps = P.xs[0], P.ps[0]
    xm, pm = np.meshgrid(G.xgrid.points(), G.pgrid.points(), indexing="ij")
    dG = _GridDerivatives(G)
    out = np.zeros(G.samples.shape, dtype=complex)
    for n in range(xdeg + P.p_degree() + 1):
        pref = (1j * hbar / 2) ** n / factorial(n)
        for a in range(n + 1):
            # poly_left: P gets d_x^a d_p^(n-a), G gets d_p^a d_x^(n-a)
            px_, pp_ = (a, n - a) if poly_left else (n - a, a)
            dP = sp.diff(P.expr, xs, px_, ps, pp_)
            if dP == 0:
                continue
            vals = PolySymbol(dP, 1, hbar, P.max_p_degree).evaluate([xm], [pm])
            gx, gp = (n - a, a) if poly_left else (a, n - a)
            out += pref * comb(n, a) * (-1) ** (n - a) * vals * dG(gx, gp)
    return G.with_samples(out, kind="star")


def _star_grid(A: PhaseSpaceFunction, B: PhaseSpaceFunction) -> PhaseSpaceFunction:
    """Twisted-convolution form of the star product.

    (A * B)(x, p) = integral d eta d eta' exp(i (eta + eta') p)
                    At(x - hbar eta'/2, eta) Bt(x + hbar eta/2, eta'),
    with At the partial transform p -> eta normalized so that
    A(x, p) = integral At(x, eta) exp(i eta p) d eta.
    """
    if A.samples.shape != B.samples.shape or A.xgrid != B.xgrid or A.pgrid != B.pgrid:
        raise GridError("grid operands must share phase-space grids")
    if A.xgrid.dims != 1:
        raise ScopeError("grid star products are one-dimensional")
    hbar = _check_hbar(A, B)
    xgrid, paxis = A.xgrid, A.pgrid.axes[0]
    eta = A.pgrid.dual().points()
    deta = A.pgrid.dual().step
    At = forward_fourier(A.samples, paxis, axis=1) / SQRT_2PI
    Bt = forward_fourier(B.samples, paxis, axis=1) / SQRT_2PI
    pts = A.pgrid.points()
    out = np.zeros(A.samples.shape, dtype=complex)
    for l, el in enumerate(eta):
        a_sh = shift_samples(At, xgrid, [-0.5 * hbar * el])[0]
        b_sh = shift_samples(Bt[:, l], xgrid, 0.5 * hbar * eta).T
        inner = SQRT_2PI * inverse_fourier(a_sh * b_sh, paxis, axis=1)
        out += deta * np.exp(1j * el * pts)[None, :] * inner
    return A.with_samples(out, kind="star")


def moyal_star(A: WeylSymbol, B: WeylSymbol) -> WeylSymbol:
    """A * B for polynomial or gridded symbols."""
    pa, pb = isinstance(A, PolySymbol), isinstance(B, PolySymbol)
    if pa and pb:
        return _star_poly(A, B)
    if pa:
        return _bopp(A, B, poly_left=True)
    if pb:
        return _bopp(B, A, poly_left=False)
    return _star_grid(A, B)


def moyal_bracket(A: WeylSymbol, B: WeylSymbol) -> WeylSymbol:
    """[A, B]_M = A * B - B * A (purely imaginary for real operands)."""
    ab, ba = moyal_star(A, B), moyal_star(B, A)
    if isinstance(ab, PolySymbol):
        return ab.like(sp.expand(ab.expr - ba.expr))
    return ab.with_samples(ab.samples - ba.samples, kind="bracket")


@dataclass(frozen=True)
class StarGenFunction:
    symbol: PhaseSpaceFunction
    eigenvalues: tuple[float, ...]
    tag: str = ""

    @property
    def eigenvalue(self) -> float:
        return self.eigenvalues[0]


def stargenfunction_projector(ops: Sequence[Applier], eigenstate: WaveFunction,
                              eigenvalues: Sequence[float], pgrid: SpatialGrid | None = None,
                              tol: float = 1e-6, tag: str = "") -> StarGenFunction:
    """Weyl symbol of |a><a| for a simultaneous eigenstate of ``ops``."""
    if len(ops) != len(eigenvalues):
        raise ValueError("one eigenvalue per operator is required")
    for op, a in zip(ops, eigenvalues):
        r = eigen_residual(eigenstate, op, a)
        if r > tol:
            raise PSBohmError(f"eigenstate residual {r:.3e} exceeds {tol:.1e} for eigenvalue {a}")
    G = weyl_symbol("projector", state=eigenstate, pgrid=pgrid)
    return StarGenFunction(G, tuple(float(a) for a in eigenvalues), tag)


def marginal_projector(parts: Sequence[StarGenFunction], keep: int = 0, tag: str = "") -> StarGenFunction:
    """Sum projector symbols over the unreported eigenvalues, keeping eigenvalue ``keep``."""
    if not parts:
        raise ValueError("no projectors to sum")
    a = parts[0].eigenvalues[keep]
    if any(not np.isclose(g.eigenvalues[keep], a) for g in parts):
        raise ValueError("projectors disagree on the reported eigenvalue")
    total = sum(g.symbol.samples for g in parts)
    return StarGenFunction(parts[0].symbol.with_samples(total, kind="marginal_projector"), (a,), tag)


def stargen_residual(A: WeylSymbol, G: StarGenFunction | PhaseSpaceFunction,
                     a: float | None = None) -> float:
    """||A * G - a G||_2 / ||G||_2 on the phase-space grid."""
    if isinstance(G, StarGenFunction):
        a = G.eigenvalue if a is None else a
        G = G.symbol
    if a is None:
        raise ValueError("eigenvalue required for a bare grid symbol")
    R = moyal_star(A, G).samples - a * G.samples
    return float(np.sqrt(np.sum(np.abs(R) ** 2) / np.sum(np.abs(G.samples) ** 2)))
