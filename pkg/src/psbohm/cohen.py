"""Cohen-class kernels: f-distributions, f-symbols, f-star products, f-probabilities.

Conventions.  For a phase-space distribution F the characteristic function is
chi(xi, eta) = integral F exp(i xi x + i eta p) dx dp, and the f-distribution
has chi_f = f * chi_W.  A symbol is written A = integral a(xi, eta)
exp(i xi x + i eta p) d xi d eta and its f-symbol has a_f = a_W / f, i.e.
A_f = f^-1(-i d_x, -i d_p) A_W.  Pairings integral A_f F_f therefore do not
depend on f.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import factorial
from typing import Callable

import numpy as np
import sympy as sp
from sympy.utilities.iterables import multiset_permutations

from .errors import GridError, MaskError, ScopeError
from .moyal import moyal_star
from .transforms import (PhaseSpaceFunction, SpatialGrid, forward_fourier, inverse_fourier,
                         spectral_derivative)
from .wigner import PolySymbol, Probability, WeylSymbol, _probability
from .wigner import p as p_sym
from .wigner import x as x_sym

xi, eta = sp.symbols("xi eta", real=True)

EPS_F = 1e-8
MASK_TOLERANCE = 1e-6


@dataclass(frozen=True, eq=False)
class CohenKernel:
    """Kernel f(xi, eta) on the duals of a phase-space grid.

    ``mask`` marks nodes where f itself is undefined, ``inverse_mask`` nodes
    where 1/f is; masked entries of ``samples`` / ``inverse_samples`` are 0.
    """

    xgrid: SpatialGrid
    pgrid: SpatialGrid
    samples: np.ndarray
    inverse_samples: np.ndarray
    mask: np.ndarray
    inverse_mask: np.ndarray
    tag: str = "custom"
    expr: sp.Expr | None = None
    poly_map: Callable[[PolySymbol], PolySymbol] | None = None
    poly_unmap: Callable[[PolySymbol], PolySymbol] | None = None
    log_gradient: np.ndarray | None = None      # (d_xi ln f, d_eta ln f), shape (2,) + grid
    log_gradient_mask: np.ndarray | None = None
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        shape = self.xgrid.shape + self.pgrid.shape
        for name in ("samples", "inverse_samples", "mask", "inverse_mask"):
            if getattr(self, name).shape != shape:
                raise GridError(f"kernel {name} has shape {getattr(self, name).shape}, expected {shape}")
        f00 = self.samples[self.origin]
        if self.mask[self.origin] or abs(f00 - 1.0) > 1e-10:
            raise ValueError(f"kernel must satisfy f(0, 0) = 1, got {f00}")

    @property
    def origin(self) -> tuple[int, int]:
        return (self.xgrid.axes[0].count // 2, self.pgrid.axes[0].count // 2)

    @property
    def xi(self) -> np.ndarray:
        return self.xgrid.dual().points()

    @property
    def eta(self) -> np.ndarray:
        return self.pgrid.dual().points()

    @property
    def masked_fraction(self) -> float:
        return float(self.mask.mean())

    @property
    def inverse_masked_fraction(self) -> float:
        return float(self.inverse_mask.mean())

    @property
    def is_wigner(self) -> bool:
        return self.tag == "wigner"


def wigner_kernel(xgrid: SpatialGrid, pgrid: SpatialGrid) -> CohenKernel:
    shape = xgrid.shape + pgrid.shape
    one = np.ones(shape, dtype=complex)
    none = np.zeros(shape, dtype=bool)
    return CohenKernel(xgrid, pgrid, one, one.copy(), none, none.copy(), "wigner", sp.Integer(1))


def kernel_from_expr(expr, xgrid: SpatialGrid, pgrid: SpatialGrid, eps: float = EPS_F,
                     tag: str = "custom") -> CohenKernel:
    """Sample a closed-form kernel f(xi, eta) given as a sympy expression."""
    expr = sp.sympify(expr)
    if expr.free_symbols - {xi, eta}:
        raise ValueError("kernel expression may depend on xi and eta only")
    XI, ETA = np.meshgrid(xgrid.dual().points(), pgrid.dual().points(), indexing="ij")
    f = np.broadcast_to(np.asarray(sp.lambdify((xi, eta), expr, "numpy")(XI, ETA), dtype=complex),
                        XI.shape).copy()
    # thresholds are relative to f(0, 0) = 1: entries above 1/eps would
    # amplify roundoff, entries below eps make the inverse ill-posed
    bad = ~np.isfinite(f)
    f[bad] = 0.0
    big = bad | (np.abs(f) > 1.0 / eps)
    small = bad | (np.abs(f) < eps)
    with np.errstate(over="ignore"):
        inv = np.zeros_like(f)
        inv[~small] = 1.0 / f[~small]
    f[big] = 0.0
    logf = sp.log(expr)
    grad = np.array([np.broadcast_to(np.asarray(sp.lambdify((xi, eta), sp.diff(logf, v), "numpy")(XI, ETA),
                                                dtype=complex), XI.shape) for v in (xi, eta)])
    gmask = bad | ~np.all(np.isfinite(grad), axis=0)
    grad[:, gmask] = 0.0
    return CohenKernel(xgrid, pgrid, f, inv, big, small, tag, expr,
                       log_gradient=grad, log_gradient_mask=gmask)


def _spectrum(samples, xgrid, pgrid, sign):
    c = forward_fourier(samples, xgrid.axes[0], axis=0, sign=sign)
    return forward_fourier(c, pgrid.axes[0], axis=1, sign=sign)


def _from_spectrum(spec, xgrid, pgrid, sign):
    c = inverse_fourier(spec, pgrid.axes[0], axis=1, sign=sign)
    return inverse_fourier(c, xgrid.axes[0], axis=0, sign=sign)


def _check_grids(F: PhaseSpaceFunction, k: CohenKernel) -> None:
    if F.xgrid != k.xgrid or F.pgrid != k.pgrid:
        raise GridError("kernel and phase-space function use different grids")


def _apply_multiplier(F: PhaseSpaceFunction, k: CohenKernel, inverse: bool, sign: int,
                      tol: float, **meta) -> PhaseSpaceFunction:
    _check_grids(F, k)
    mult, mask = (k.inverse_samples, k.inverse_mask) if inverse else (k.samples, k.mask)
    spec = _spectrum(F.samples, F.xgrid, F.pgrid, sign)
    energy = np.abs(spec) ** 2
    occupancy = float(energy[mask].sum() / energy.sum()) if mask.any() else 0.0
    if occupancy > tol:
        raise MaskError(f"kernel mask holds {occupancy:.3e} of the spectral energy "
                        f"(tolerance {tol:.1e})", occupancy=occupancy)
    out = _from_spectrum(spec * mult, F.xgrid, F.pgrid, sign)
    imag = float(np.max(np.abs(out.imag)))
    if np.isrealobj(F.samples) and imag <= 1e-10 * max(float(np.max(np.abs(out.real))), 1e-300):
        out = out.real.copy()
    return F.with_samples(out, occupancy=occupancy, imag_residue=imag, kernel=k.tag, **meta)


def to_f_distribution(FW: PhaseSpaceFunction, k: CohenKernel, tol: float = MASK_TOLERANCE) -> PhaseSpaceFunction:
    """F^f with chi_f = f chi_W (identity, bit for bit, for the Wigner kernel)."""
    if k.is_wigner:
        _check_grids(FW, k)
        return FW
    return _apply_multiplier(FW, k, inverse=False, sign=+1, tol=tol)


def _taylor_apply(A: PolySymbol, g: sp.Expr) -> PolySymbol:
    """g(-i d_x, -i d_p) A by the finite Taylor series of g at the origin."""
    if A.dims != 1:
        raise ScopeError("closed-form kernels act on one-dimensional symbols")
    a, b = A.xs[0], A.ps[0]
    nx = 0
    if xi in g.free_symbols:
        nx = A.x_degree()
        if nx is None:
            raise ScopeError("xi-dependent kernel needs a symbol polynomial in x")
    out = sp.Integer(0)
    for i in range(nx + 1):
        for j in range(A.p_degree() + 1):
            dA = sp.diff(A.expr, a, i, b, j)
            if dA == 0:
                continue
            c = complex(sp.diff(g, xi, i, eta, j).subs({xi: 0, eta: 0}))
            if c == 0:
                continue
            coef = sp.Float(c.real) if c.imag == 0 else sp.Float(c.real) + sp.I * sp.Float(c.imag)
            out += coef * (-sp.I) ** (i + j) / (factorial(i) * factorial(j)) * dA
    return A.like(sp.expand(out))


def to_f_symbol(A: WeylSymbol, k: CohenKernel, tol: float = MASK_TOLERANCE) -> WeylSymbol:
    """A_f = f^-1(-i d_x, -i d_p) A_W."""
    if k.is_wigner:
        return A
    if isinstance(A, PolySymbol):
        if k.poly_map is not None:
            return k.poly_map(A)
        if k.expr is None:
            raise ScopeError("kernel has no closed form or moment route for polynomial symbols")
        return _taylor_apply(A, 1 / k.expr)
    return _apply_multiplier(A, k, inverse=True, sign=-1, tol=tol)


def from_f_symbol(A: WeylSymbol, k: CohenKernel, tol: float = MASK_TOLERANCE) -> WeylSymbol:
    """Inverse of :func:`to_f_symbol`: A_W = f(-i d_x, -i d_p) A_f."""
    if k.is_wigner:
        return A
    if isinstance(A, PolySymbol):
        if k.poly_unmap is not None:
            return k.poly_unmap(A)
        if k.expr is None:
            raise ScopeError("kernel has no closed form or moment route for polynomial symbols")
        return _taylor_apply(A, k.expr)
    return _apply_multiplier(A, k, inverse=False, sign=-1, tol=tol)


def _weyl_words(a: int, b: int) -> list[str]:
    return ["".join(w) for w in multiset_permutations("x" * a + "p" * b)]


def f_bopp(A: PolySymbol, B: PhaseSpaceFunction, k: CohenKernel, left: bool = True,
           tol: float = MASK_TOLERANCE) -> PhaseSpaceFunction:
    """A *_f B (or B *_f A) through Bopp operators conjugated by the kernel.

    With A_W the Weyl symbol of ``A``, the product is A_W(X_f, P_f) B in
    symmetric (Weyl) order, where
    X_f = x +- (i hbar/2) d_p + i (d_xi ln f)(-i d_x, -i d_p) and
    P_f = p -+ (i hbar/2) d_x + i (d_eta ln f)(-i d_x, -i d_p).
    Only the logarithmic derivatives of f enter, so growing kernels stay
    well conditioned.
    """
    _check_grids(B, k)
    if k.log_gradient is None:
        raise ScopeError("kernel provides no logarithmic derivatives")
    if A.dims != 1:
        raise ScopeError("grid products are one-dimensional")
    AW = from_f_symbol(A, k)
    if AW.x_degree() is None:
        raise ScopeError("polynomial operand must be polynomial in x for a grid product")
    hbar = float(B.hbar)
    spec = _spectrum(B.samples, B.xgrid, B.pgrid, -1)
    energy = np.abs(spec) ** 2
    occupancy = float(energy[k.log_gradient_mask].sum() / energy.sum())
    if occupancy > tol:
        raise MaskError(f"kernel derivative mask holds {occupancy:.3e} of the spectral energy",
                        occupancy=occupancy)
    ps = SpatialGrid(B.xgrid.axes + B.pgrid.axes)
    xm, pm = np.meshgrid(B.xgrid.points(), B.pgrid.points(), indexing="ij")
    sgn = 1.0 if left else -1.0

    def gmul(w, i):
        return _from_spectrum(_spectrum(w, B.xgrid, B.pgrid, -1) * k.log_gradient[i], B.xgrid, B.pgrid, -1)

    def X(w):
        return xm * w + sgn * 0.5j * hbar * spectral_derivative(w, ps, axis=1) + 1j * gmul(w, 0)

    def P(w):
        return pm * w - sgn * 0.5j * hbar * spectral_derivative(w, ps, axis=0) + 1j * gmul(w, 1)

    poly = sp.Poly(AW.expr, x_sym, p_sym)
    out = np.zeros(B.samples.shape, dtype=complex)
    b0 = B.samples.astype(complex)
    for (a, b), c in zip(poly.monoms(), poly.coeffs()):
        words = _weyl_words(a, b)
        acc = np.zeros_like(out)
        for word in words:
            w = b0
            for letter in reversed(word):
                w = X(w) if letter == "x" else P(w)
            acc += w
        out += complex(c) * acc / len(words)
    return B.with_samples(out, kind="f_star", occupancy=occupancy)


def f_star(A: WeylSymbol, B: WeylSymbol, k: CohenKernel) -> WeylSymbol:
    """A *_f B = V_f(V_f^-1(A) * V_f^-1(B)).

    Polynomial-grid pairs go through :func:`f_bopp` when the kernel carries
    logarithmic derivatives; other pairs conjugate the Moyal product.
    """
    if k.is_wigner:
        return moyal_star(A, B)
    pa, pb = isinstance(A, PolySymbol), isinstance(B, PolySymbol)
    if pa != pb and k.log_gradient is not None:
        return f_bopp(A, B, k, left=True) if pa else f_bopp(B, A, k, left=False)
    return to_f_symbol(moyal_star(from_f_symbol(A, k), from_f_symbol(B, k)), k)


def f_stargenfunction(GW: PhaseSpaceFunction, k: CohenKernel, tol: float = MASK_TOLERANCE) -> PhaseSpaceFunction:
    """f-symbol of a projector, from its Weyl stargenfunction."""
    if k.is_wigner:
        _check_grids(GW, k)
        return GW
    return _apply_multiplier(GW, k, inverse=True, sign=-1, tol=tol, kind="f_stargenfunction")


def expectation_f(Ff: PhaseSpaceFunction, Af: WeylSymbol) -> float:
    a = Af.on_grid(Ff.xgrid, Ff.pgrid) if isinstance(Af, PolySymbol) else Af.samples
    return float(np.real(np.sum(a * Ff.samples) * Ff.volume_element))


def probability_f(Ff: PhaseSpaceFunction, Gf: PhaseSpaceFunction) -> Probability:
    """integral F_f G_f, clamped to [0, 1] with the raw value kept."""
    if Ff.samples.shape != Gf.samples.shape:
        raise GridError("distribution and stargenfunction grids differ")
    return _probability(np.sum(Ff.samples * Gf.samples) * Ff.volume_element)
