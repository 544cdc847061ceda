"""Wigner function, Weyl symbols and Weyl-route expectations and probabilities."""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
import sympy as sp

from .errors import GridError, ScopeError
from .transforms import (SQRT_2PI, SpatialGrid, PhaseSpaceFunction, WaveFunction, check_support,
                         forward_fourier, shift_samples)

x, y, z = X = sp.symbols("x y z", real=True)
px, py, pz = P = sp.symbols("px py pz", real=True)
p = px


@dataclass(frozen=True)
class PolySymbol:
    """Phase-space symbol given in closed form, at most quadratic in momentum.

    ``expr`` is a sympy expression in ``x, y, z`` / ``px, py, pz`` (the first
    ``dims`` of each); coefficients of the momentum monomials may be any
    closed-form function of position.
    """

    expr: sp.Expr
    dims: int = 1
    hbar: float = 1.0
    max_p_degree: int = 2

    def __post_init__(self):
        object.__setattr__(self, "expr", sp.sympify(self.expr))
        extra = self.expr.free_symbols - set(self.xs) - set(self.ps)
        if extra:
            raise ScopeError(f"symbol depends on unknown variables {sorted(map(str, extra))}")
        if self.p_degree() > self.max_p_degree:
            raise ScopeError(f"symbols are limited to degree {self.max_p_degree} in momentum")

    @property
    def xs(self) -> tuple[sp.Symbol, ...]:
        return X[: self.dims]

    @property
    def ps(self) -> tuple[sp.Symbol, ...]:
        return P[: self.dims]

    def p_degree(self) -> int:
        return _degree(self.expr, self.ps)

    def x_degree(self) -> int | None:
        """Total degree in position, or None if not polynomial in position."""
        try:
            return _degree(self.expr, self.xs)
        except ScopeError:
            return None

    def evaluate(self, xs, ps) -> np.ndarray:
        """Evaluate on broadcastable position/momentum arrays (lists of length dims)."""
        f = sp.lambdify(self.xs + self.ps, self.expr, "numpy")
        args = list(xs) + list(ps)
        val = np.asarray(f(*args))
        return np.broadcast_to(val, np.broadcast(*args).shape).copy()

    def on_grid(self, xgrid: SpatialGrid, pgrid: SpatialGrid) -> np.ndarray:
        xm, pm = np.meshgrid(xgrid.points(), pgrid.points(), indexing="ij")
        return self.evaluate([xm], [pm])

    def simplify(self) -> "PolySymbol":
        return self.like(sp.expand(self.expr))

    def like(self, expr) -> "PolySymbol":
        return PolySymbol(expr, self.dims, self.hbar, self.max_p_degree)

    def __add__(self, other):
        return self.like(self.expr + _expr(other))

    __radd__ = __add__

    def __sub__(self, other):
        return self.like(self.expr - _expr(other))

    def __rsub__(self, other):
        return self.like(_expr(other) - self.expr)

    def __mul__(self, c):
        return self.like(self.expr * _expr(c))

    __rmul__ = __mul__

    def __neg__(self):
        return self.like(-self.expr)

    def equals(self, other, tol: float = 1e-10) -> bool:
        d = sp.expand(self.expr - _expr(other))
        if d == 0:
            return True
        try:
            poly = sp.Poly(d, *(self.xs + self.ps))
        except sp.PolynomialError:
            return False
        return all(abs(complex(c)) < tol for c in poly.coeffs())


def _expr(obj):
    return obj.expr if isinstance(obj, PolySymbol) else sp.sympify(obj)


def _degree(expr, syms) -> int:
    expr = sp.expand(expr)
    if expr == 0:
        return 0
    try:
        return sp.Poly(expr, *syms).total_degree()
    except sp.PolynomialError as exc:
        raise ScopeError(f"{expr} is not polynomial in {syms}") from exc


WeylSymbol = PolySymbol | PhaseSpaceFunction


def default_pgrid(xgrid: SpatialGrid, hbar: float = 1.0, count: int | None = None) -> SpatialGrid:
    """Centered momentum grid reaching the x-grid Nyquist momentum ``pi hbar / step``.

    Its dual displacements ``hbar * y / 2`` stay within a quarter of the x
    span, so states occupying up to half the box are free of wrap ghosts.
    """
    if xgrid.dims != 1:
        raise GridError("phase-space grids are one-dimensional")
    n = count or xgrid.axes[0].count
    dp = 2.0 * np.pi * hbar / (n * xgrid.step)
    return SpatialGrid.centered(dp, n)


def _check_phase_space_grids(xgrid: SpatialGrid, pgrid: SpatialGrid, hbar: float) -> None:
    if xgrid.dims != 1 or pgrid.dims != 1:
        raise GridError("phase-space routines support one spatial dimension")
    if not pgrid.is_centered():
        raise GridError("momentum grid must be centered")
    ygrid = pgrid.dual().axes[0]
    max_shift = hbar * 0.5 * ygrid.count * ygrid.step / 2.0
    if max_shift > 0.5 * xgrid.axes[0].span * (1 + 1e-12):
        raise GridError("momentum grid too fine: hbar * y / 2 exceeds half the x span")
    if pgrid.axes[0].count * pgrid.axes[0].step / 2.0 > hbar * np.pi / xgrid.step * (1 + 1e-12):
        raise GridError("momentum grid exceeds the x-grid Nyquist momentum")


def support_width(samples: np.ndarray, step: float, threshold: float = 1e-8) -> float:
    """Width of the smallest periodic window holding every sample above ``threshold * max``."""
    occ = np.abs(samples) > threshold * np.abs(samples).max()
    idx = np.flatnonzero(occ)
    n = samples.size
    gaps = np.diff(np.concatenate([idx, [idx[0] + n]]))
    return float((n - gaps.max() + 1) * step)


def wigner_correlation(psi: WaveFunction, pgrid: SpatialGrid) -> np.ndarray:
    """K[x, k] = conj(psi(x - hbar y_k / 2)) psi(x + hbar y_k / 2) on the dual of ``pgrid``."""
    _check_phase_space_grids(psi.grid, pgrid, psi.hbar)
    ygrid = pgrid.dual().axes[0]
    max_shift = psi.hbar * 0.5 * ygrid.count * ygrid.step / 2.0
    width = support_width(psi.samples, psi.grid.step)
    if 2.0 * max_shift + width > psi.grid.axes[0].span * (1 + 1e-12):
        raise GridError(f"aliasing: displacement {2 * max_shift:.4g} plus support {width:.4g} "
                        f"exceeds the x span; use a coarser momentum grid")
    yk = pgrid.dual().points()
    plus = shift_samples(psi.samples, psi.grid, 0.5 * psi.hbar * yk)
    minus = shift_samples(psi.samples, psi.grid, -0.5 * psi.hbar * yk)
    return (np.conj(minus) * plus).T


def ambiguity_function(psi: WaveFunction, pgrid: SpatialGrid, correlation=None) -> np.ndarray:
    """D(xi, eta) = integral conj(psi(v - hbar eta/2)) psi(v + hbar eta/2) exp(i xi v) dv."""
    K = wigner_correlation(psi, pgrid) if correlation is None else correlation
    return SQRT_2PI * forward_fourier(K, psi.grid.axes[0], axis=0, sign=+1)


def wigner_transform(psi: WaveFunction, pgrid: SpatialGrid | None = None) -> PhaseSpaceFunction:
    """Wigner function of a pure state, unit-normalized in (x, p)."""
    check_support(psi.samples)
    if pgrid is None:
        pgrid = default_pgrid(psi.grid, psi.hbar)
    K = wigner_correlation(psi, pgrid)
    F = forward_fourier(K, pgrid.dual().axes[0], axis=1) / SQRT_2PI
    imag = float(np.max(np.abs(F.imag)))
    out = PhaseSpaceFunction(psi.grid, pgrid, F.real.copy(), psi.hbar)
    out.meta.update(imag_residue=imag, min=float(F.real.min()), norm=float(out.integral().real))
    return out


def characteristic_function_grid(F: PhaseSpaceFunction) -> np.ndarray:
    """chi(xi, eta) = integral F exp(i xi x + i eta p) on the dual grids."""
    c = forward_fourier(F.samples, F.xgrid.axes[0], axis=0, sign=+1)
    return 2.0 * np.pi * forward_fourier(c, F.pgrid.axes[0], axis=1, sign=+1)


def marginals(F: PhaseSpaceFunction) -> tuple[np.ndarray, np.ndarray]:
    """(integral over p, integral over x)."""
    return (np.sum(F.samples, axis=1) * F.pgrid.volume_element,
            np.sum(F.samples, axis=0) * F.xgrid.volume_element)


def weyl_symbol(kind: str, **kw) -> WeylSymbol:
    """Weyl symbol for the supported operator classes.

    kind:
      ``potential``  multiplicative operator, ``V`` a sympy expression in x
      ``momentum``   polynomial in p (``expr``) of degree <= 2
      ``position``   component ``axis`` of x
      ``angular_momentum``  component ``axis`` of x cross p (3D)
      ``L2``         total angular momentum squared (3D)
      ``hamiltonian`` p^2 / 2m + V
      ``projector``  |phi><phi| for a WaveFunction ``state`` (grid symbol)
    """
    hbar = float(kw.get("hbar", 1.0))
    dims = int(kw.get("dims", 1))
    if kind == "potential":
        V = sp.sympify(kw["V"])
        if V.free_symbols & set(P):
            raise ScopeError("potential must not depend on momentum")
        return PolySymbol(V, dims, hbar)
    if kind == "momentum":
        e = sp.sympify(kw["expr"])
        if e.free_symbols & set(X):
            raise ScopeError("momentum polynomial must not depend on position")
        return PolySymbol(e, dims, hbar)
    if kind == "position":
        return PolySymbol(X[kw.get("axis", 0)], dims, hbar)
    if kind == "angular_momentum":
        i = kw["axis"]
        j, k = (i + 1) % 3, (i + 2) % 3
        return PolySymbol(X[j] * P[k] - X[k] * P[j], 3, hbar)
    if kind == "L2":
        L = [X[(i + 1) % 3] * P[(i + 2) % 3] - X[(i + 2) % 3] * P[(i + 1) % 3] for i in range(3)]
        return PolySymbol(sp.expand(sum(l**2 for l in L)) - sp.Rational(3, 2) * hbar**2, 3, hbar)
    if kind == "hamiltonian":
        m = kw.get("mass", 1.0)
        V = sp.sympify(kw.get("V", 0))
        return PolySymbol(sum(pi**2 for pi in P[:dims]) / (2 * m) + V, dims, hbar)
    if kind == "projector":
        state: WaveFunction = kw["state"]
        F = wigner_transform(state, kw.get("pgrid"))
        return F.with_samples((2.0 * np.pi * state.hbar) ** state.grid.dims * F.samples,
                              kind="projector")
    raise ScopeError(f"unsupported operator class {kind!r}")


def _symbol_samples(A: WeylSymbol, F: PhaseSpaceFunction) -> np.ndarray:
    if isinstance(A, PolySymbol):
        return A.on_grid(F.xgrid, F.pgrid)
    if A.samples.shape != F.samples.shape:
        raise GridError("symbol and distribution grids differ")
    return A.samples


def expectation_weyl(F: PhaseSpaceFunction, A: WeylSymbol) -> float:
    val = np.sum(_symbol_samples(A, F) * F.samples) * F.volume_element
    return float(np.real(val))


class Probability(NamedTuple):
    value: float
    raw: float


def _probability(raw: complex) -> Probability:
    r = float(np.real(raw))
    if not -1e-6 <= r <= 1 + 1e-6:
        raise ValueError(f"probability {r} outside [0, 1]")
    return Probability(min(max(r, 0.0), 1.0), r)


def probability_weyl(F: PhaseSpaceFunction, G: PhaseSpaceFunction) -> Probability:
    """Pair a distribution with a stargenfunction; returns clamped and raw values."""
    return _probability(np.sum(_symbol_samples(G, F) * F.samples) * F.volume_element)


def position_delta(xgrid: SpatialGrid, pgrid: SpatialGrid, x_prime: float, hbar=1.0) -> PhaseSpaceFunction:
    """Grid delta(x - x') (constant in p); ``x_prime`` is snapped to a node."""
    i = xgrid.axes[0].index_of(x_prime)
    G = np.zeros(xgrid.shape + pgrid.shape)
    G[i, :] = 1.0 / xgrid.step
    return PhaseSpaceFunction(xgrid, pgrid, G, hbar, {"kind": "position_delta",
                                                      "x_prime": float(xgrid.points()[i])})


def momentum_delta(xgrid: SpatialGrid, pgrid: SpatialGrid, p_prime: float, hbar=1.0) -> PhaseSpaceFunction:
    """Grid delta(p - p') (constant in x); ``p_prime`` is snapped to a node."""
    j = pgrid.axes[0].index_of(p_prime)
    G = np.zeros(xgrid.shape + pgrid.shape)
    G[:, j] = 1.0 / pgrid.step
    return PhaseSpaceFunction(xgrid, pgrid, G, hbar, {"kind": "momentum_delta",
                                                      "p_prime": float(pgrid.points()[j])})
