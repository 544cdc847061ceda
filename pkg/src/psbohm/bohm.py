"""The Bohm kernel, the Bohm point measure, Bohm symbols and Bohm probabilities.

The Bohm distribution R^2(x) delta(p - grad S(x)) is never gridded: it is a
weighted point measure, paired with symbols by exact sums and compared with
gridded objects through characteristic functions.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import partial
from typing import NamedTuple

import numpy as np
import sympy as sp

from .cohen import EPS_F, MASK_TOLERANCE, CohenKernel, f_stargenfunction
from .errors import GridError, MaskError, ScopeError
from .madelung import MadelungFields, decompose
from .operators import Applier
from .transforms import (PhaseSpaceFunction, SpatialGrid, WaveFunction, fourier_coefficients,
                         forward_fourier, quadrature, shift_samples, spectral_derivative, trig_eval)
from .wigner import (SQRT_2PI, PolySymbol, Probability, _probability, ambiguity_function,
                     default_pgrid, wigner_correlation)


@dataclass(frozen=True, eq=False)
class BohmMeasure:
    """Weighted points (x_i, R^2(x_i) dV, grad S(x_i)), one per unmasked node."""

    positions: np.ndarray     # (n, dims)
    weights: np.ndarray       # (n,)
    momenta: np.ndarray       # (n, dims)
    nodes: np.ndarray         # flat grid indices of the points
    grid: SpatialGrid
    hbar: float
    masked_mass: float

    @property
    def total_weight(self) -> float:
        return float(self.weights.sum())

    @property
    def dims(self) -> int:
        return self.grid.dims

    def position_density(self) -> np.ndarray:
        """Position marginal on the grid (weights divided by the volume element)."""
        out = np.zeros(self.grid.shape).ravel()
        out[self.nodes] = self.weights / self.grid.volume_element
        return out.reshape(self.grid.shape)

    def momentum_histogram(self, edges: np.ndarray, axis: int = 0) -> np.ndarray:
        """Bohm momentum marginal: mass per bin of the guidance momenta."""
        hist, _ = np.histogram(self.momenta[:, axis], bins=edges, weights=self.weights)
        return hist


def bohm_measure(fields: MadelungFields) -> BohmMeasure:
    ok = ~fields.node_mask.ravel()
    nodes = np.flatnonzero(ok)
    pos = np.stack([m.ravel()[nodes] for m in fields.grid.mesh()], axis=1)
    mom = np.stack([g.ravel()[nodes] for g in fields.gradS], axis=1)
    w = fields.density.ravel()[nodes] * fields.grid.volume_element
    return BohmMeasure(pos, w, mom, nodes, fields.grid, fields.hbar, fields.masked_mass)


def characteristic_function(m: BohmMeasure, xi, eta) -> np.ndarray:
    """sum_i w_i exp(i xi . x_i + i eta . p_i) at paired (xi, eta) samples.

    ``xi`` and ``eta`` have shape (..., dims), or (...) in one dimension.
    """
    xi = np.asarray(xi, dtype=float)
    eta = np.asarray(eta, dtype=float)
    if m.dims == 1 and (xi.ndim == 0 or xi.shape[-1] != 1):
        xi, eta = xi[..., None], eta[..., None]
    shape = np.broadcast_shapes(xi.shape, eta.shape)[:-1]
    xi = np.broadcast_to(xi, shape + (m.dims,)).reshape(-1, m.dims)
    eta = np.broadcast_to(eta, shape + (m.dims,)).reshape(-1, m.dims)
    out = np.empty(xi.shape[0], dtype=complex)
    for s in range(0, xi.shape[0], 256):
        ph = xi[s:s + 256] @ m.positions.T + eta[s:s + 256] @ m.momenta.T
        out[s:s + 256] = np.exp(1j * ph) @ m.weights
    return out.reshape(shape)


def characteristic_grid(m: BohmMeasure, xi: np.ndarray, eta: np.ndarray,
                        xpow: int = 0, ppow: int = 0) -> np.ndarray:
    """Outer-product table N[a, b] = sum_i w_i x_i^xpow p_i^ppow exp(i xi_a x_i + i eta_b p_i) (1D)."""
    if m.dims != 1:
        raise ScopeError("characteristic tables are one-dimensional")
    x, p = m.positions[:, 0], m.momenta[:, 0]
    w = m.weights * x**xpow * p**ppow
    ex = np.exp(1j * np.multiply.outer(xi, x))
    ep = np.exp(1j * np.multiply.outer(p, eta))
    return ex @ (w[:, None] * ep)


# ---------------------------------------------------------------- moments


@dataclass(frozen=True)
class StateMoments:
    """R^2-weighted moments entering the second-order Bohm-symbol correction.

    L_ij = d_i d_j ln R.  ``mean_L[i, j] = <L_ij>``, ``xL[k, i, j] = <x_k L_ij>``,
    ``xxL[k, l, i, j] = <x_k x_l L_ij>``; ``mean_x``, ``mean_xx`` are plain
    position moments.  All integrals use the division-free weighted form
    R^2 L_ij = (d_i d_j P - 4 Re(u* d_i psi) Re(u* d_j psi)) / 2 with u the
    phase of psi, so every grid node contributes.
    """

    dims: int
    hbar: float
    mean_L: np.ndarray
    xL: np.ndarray
    xxL: np.ndarray
    mean_x: np.ndarray
    mean_xx: np.ndarray

    def coefficients(self, i: int, j: int) -> tuple[float, np.ndarray, np.ndarray]:
        """(c0, c1[k], c2[k, l]) of the operator c0 + c1_k d_k + c2_kl d_k d_l."""
        L = self.mean_L[i, j]
        c1 = self.xL[:, i, j] - self.mean_x * L
        xl = self.xL[:, i, j]
        c2 = (0.5 * self.xxL[:, :, i, j] - 0.5 * (np.outer(xl, self.mean_x) + np.outer(self.mean_x, xl))
              - 0.5 * L * self.mean_xx + L * np.outer(self.mean_x, self.mean_x))
        return float(L), c1, c2


def weighted_log_hessian(psi: WaveFunction) -> np.ndarray:
    """R^2 d_i d_j ln R on every node, shape (dims, dims) + grid.shape."""
    g, w = psi.grid, psi.samples
    d = g.dims
    dens = np.abs(w) ** 2
    R = np.sqrt(dens)
    u = np.zeros_like(w)
    np.divide(w, R, out=u, where=R > 0)
    dw = [spectral_derivative(w, g, axis=i) for i in range(d)]
    dP = [2.0 * np.real(np.conj(w) * dwi) for dwi in dw]
    ru = [np.real(np.conj(u) * dwi) for dwi in dw]
    out = np.empty((d, d) + g.shape)
    for i in range(d):
        for j in range(i, d):
            ddP = spectral_derivative(dP[i], g, axis=j)
            out[i, j] = out[j, i] = 0.5 * (ddP - 4.0 * ru[i] * ru[j])
    return out


def state_moments(psi: WaveFunction) -> StateMoments:
    g = psi.grid
    d = g.dims
    P = np.abs(psi.samples) ** 2
    PL = weighted_log_hessian(psi)
    X = g.mesh()
    q = lambda f: float(quadrature(f, g))
    mean_L = np.array([[q(PL[i, j]) for j in range(d)] for i in range(d)])
    xL = np.array([[[q(X[k] * PL[i, j]) for j in range(d)] for i in range(d)] for k in range(d)])
    xxL = np.array([[[[q(X[k] * X[l] * PL[i, j]) for j in range(d)] for i in range(d)]
                     for l in range(d)] for k in range(d)])
    mean_x = np.array([q(X[k] * P) for k in range(d)])
    mean_xx = np.array([[q(X[k] * X[l] * P) for l in range(d)] for k in range(d)])
    return StateMoments(d, psi.hbar, mean_L, xL, xxL, mean_x, mean_xx)


def _correction(A: PolySymbol, moments: StateMoments) -> sp.Expr:
    """sum_ij C_ij(-i grad_x) [d_pi d_pj A], exact for momentum degree <= 2."""
    if A.dims != moments.dims:
        raise ScopeError("symbol and state live in different dimensions")
    if A.p_degree() > 2:
        raise ScopeError("the moment route terminates only for momentum degree <= 2")
    xs, ps = A.xs, A.ps
    out = sp.Integer(0)
    for i in range(A.dims):
        for j in range(A.dims):
            B = sp.expand(sp.diff(A.expr, ps[i], ps[j]))
            if B == 0:
                continue
            try:
                deg = sp.Poly(B, *xs).total_degree()
            except sp.PolynomialError as exc:
                raise ScopeError("d_p d_p A must be polynomial in x") from exc
            if deg > 2:
                raise ScopeError("d_p d_p A must have position degree <= 2")
            c0, c1, c2 = moments.coefficients(i, j)
            term = c0 * B
            term += sum(c1[k] * sp.diff(B, xs[k]) for k in range(A.dims))
            term += sum(c2[k, l] * sp.diff(B, xs[k], xs[l]) for k in range(A.dims) for l in range(A.dims))
            out += term
    return sp.expand(out)


def bohm_map_poly(A: PolySymbol, moments: StateMoments) -> PolySymbol:
    """Bohm symbol A_B = A_W - (hbar^2/4) sum_ij C_ij(-i grad) d_pi d_pj A_W."""
    h2 = moments.hbar**2 / 4.0
    return A.like(sp.expand(A.expr - h2 * _correction(A, moments)))


def bohm_unmap_poly(A: PolySymbol, moments: StateMoments) -> PolySymbol:
    """Inverse of :func:`bohm_map_poly` (the correction has no momentum dependence)."""
    h2 = moments.hbar**2 / 4.0
    return A.like(sp.expand(A.expr + h2 * _correction(A, moments)))


# ---------------------------------------------------------------- kernel

# Truncating the measure at the Madelung default (1e-6 of the peak density)
# leaves an O(1e-6) sinc floor in N that swamps the kernel wherever |D| is
# small, so the kernel keeps every node whose density is representable.
KERNEL_EPS_NODE = 1e-24


def _cross_correlation(a, b, grid, pgrid, hbar):
    """conj(a(x - hbar y/2)) b(x + hbar y/2) on the dual of ``pgrid`` (x first)."""
    yk = pgrid.dual().points()
    plus = shift_samples(b, grid, 0.5 * hbar * yk)
    minus = shift_samples(a, grid, -0.5 * hbar * yk)
    return (np.conj(minus) * plus).T


def bohm_kernel(psi: WaveFunction, fields: MadelungFields | None = None,
                pgrid: SpatialGrid | None = None, eps: float = EPS_F) -> CohenKernel:
    """f_B = N / D on the dual phase-space grid (one dimension).

    N(xi, eta) = sum_i w_i exp(i xi x_i + i eta grad S(x_i)) over the Bohm
    measure, D the ambiguity function.  f is masked where |D| < eps,
    1/f where |N| < eps (both relative to the origin value 1).  f(xi, 0) = 1
    is set exactly.
    """
    if psi.grid.dims != 1:
        raise ScopeError("the gridded Bohm kernel is one-dimensional")
    fields = decompose(psi, eps_node=KERNEL_EPS_NODE) if fields is None else fields
    if fields.psi is not psi and not np.array_equal(fields.psi.samples, psi.samples):
        raise GridError("fields were decomposed from a different state")
    pgrid = default_pgrid(psi.grid, psi.hbar) if pgrid is None else pgrid
    m = bohm_measure(fields)
    xi_pts, eta_pts = psi.grid.dual().points(), pgrid.dual().points()
    K = wigner_correlation(psi, pgrid)
    D = ambiguity_function(psi, pgrid, correlation=K)
    N = characteristic_grid(m, xi_pts, eta_pts)
    origin = (psi.grid.axes[0].count // 2, pgrid.axes[0].count // 2)
    d0 = abs(D[origin])
    if d0 < 0.5:
        raise MaskError("ambiguity function is degenerate at the origin", occupancy=1.0)
    mask = np.abs(D) < eps * d0
    inv_mask = np.abs(N) < eps * abs(N[origin])
    gmask = mask | inv_mask
    f = np.zeros_like(D)
    inv = np.zeros_like(D)
    np.divide(N, D, out=f, where=~mask)
    np.divide(D, N, out=inv, where=~inv_mask)
    j0 = origin[1]
    f[:, j0] = 1.0
    inv[:, j0] = 1.0
    mask[:, j0] = False
    inv_mask[:, j0] = False

    # logarithmic derivatives for the conjugated Bopp route
    x = psi.grid.points()
    dN_xi = 1j * characteristic_grid(m, xi_pts, eta_pts, xpow=1)
    dN_eta = 1j * characteristic_grid(m, xi_pts, eta_pts, ppow=1)
    dD_xi = SQRT_2PI * forward_fourier(1j * x[:, None] * K, psi.grid.axes[0], axis=0, sign=+1)
    dpsi = spectral_derivative(psi.samples, psi.grid)
    dK = 0.5 * psi.hbar * (_cross_correlation(psi.samples, dpsi, psi.grid, pgrid, psi.hbar)
                           - _cross_correlation(dpsi, psi.samples, psi.grid, pgrid, psi.hbar))
    dD_eta = SQRT_2PI * forward_fourier(dK, psi.grid.axes[0], axis=0, sign=+1)
    grad = np.zeros((2,) + D.shape, dtype=complex)
    ok = ~gmask
    grad[0][ok] = dN_xi[ok] / N[ok] - dD_xi[ok] / D[ok]
    grad[1][ok] = dN_eta[ok] / N[ok] - dD_eta[ok] / D[ok]
    grad[0][:, j0] = 0.0

    moments = state_moments(psi)
    k = CohenKernel(psi.grid, pgrid, f, inv, mask, inv_mask, "bohm",
                    poly_map=partial(bohm_map_poly, moments=moments),
                    poly_unmap=partial(bohm_unmap_poly, moments=moments),
                    log_gradient=grad, log_gradient_mask=gmask,
                    info={"moments": moments, "numerator": N, "denominator": D,
                          "node_masked_mass": fields.masked_mass})
    k.info.update(kernel_diagnostics(k))
    return k


def kernel_diagnostics(k: CohenKernel) -> dict:
    """Mask fractions and the xi-variation of f at fixed eta on the unmasked window.

    ``xi_variation`` is sup |f(xi, eta) - f(0, eta)| over the window divided by
    sup |f| there.  ``xi_variation_pointwise`` divides by |f(0, eta)| instead;
    it is roundoff-limited near the mask edge, where |D| is close to eps.
    """
    j0 = k.origin[0]
    ref = k.samples[j0]          # f(0, eta)
    ok = ~k.mask & ~k.mask[j0][None, :]
    dev = np.where(ok, np.abs(k.samples - ref[None, :]), 0.0)
    scale = float(np.max(np.abs(k.samples[ok])))
    with np.errstate(divide="ignore", invalid="ignore"):
        rel = np.where(ok, dev / np.abs(ref)[None, :], 0.0)
    return {"masked_fraction": k.masked_fraction,
            "inverse_masked_fraction": k.inverse_masked_fraction,
            "xi_variation": float(dev.max()) / scale,
            "xi_variation_pointwise": float(np.nanmax(rel))}


# ---------------------------------------------------------------- expectations


def local_expectation(psi: WaveFunction, op: Applier, fields: MadelungFields) -> np.ndarray:
    """Re(psi* A psi) / |psi|^2 off the node mask, 0 on it."""
    num = np.real(np.conj(psi.samples) * op(psi))
    out = np.zeros(psi.grid.shape)
    ok = ~fields.node_mask
    out[ok] = num[ok] / fields.density[ok]
    return out


def weighted_local_expectation(psi: WaveFunction, op: Applier) -> np.ndarray:
    """R^2 times the local expectation value, Re(psi* A psi), on every node."""
    return np.real(np.conj(psi.samples) * op(psi))


def expectation_bohm(m: BohmMeasure, A) -> float:
    """sum_i w_i A(x_i, p_i) for symbols, sum_i w_i A[node_i] for grid arrays."""
    if isinstance(A, PolySymbol):
        vals = A.evaluate(list(m.positions.T), list(m.momenta.T))
        return float(np.real(np.sum(m.weights * vals)))
    A = np.asarray(A)
    if A.shape != m.grid.shape:
        raise GridError("local-expectation array does not match the measure's grid")
    return float(np.sum(m.weights * A.ravel()[m.nodes]))


# ---------------------------------------------------------------- stargenfunctions


def _xi_independent(k: CohenKernel, tol: float) -> np.ndarray:
    j0 = k.origin[0]
    row = k.inverse_samples[j0]
    ok = ~k.inverse_mask
    dev = np.where(ok, np.abs(k.inverse_samples - row[None, :]), 0.0)
    scale = float(np.max(np.abs(row)))
    if float(dev.max()) > tol * scale:
        raise ScopeError(f"kernel inverse varies with xi by {dev.max() / scale:.2e}; "
                         "use bohm_stargenfunction for the general route")
    if k.inverse_mask[j0].any():
        raise MaskError("inverse kernel masked on the xi = 0 row", occupancy=float(k.inverse_mask[j0].mean()))
    return row


def momentum_stargenfunction(k: CohenKernel, p_prime: float, p: np.ndarray | None = None,
                             tol: float = 1e-6) -> np.ndarray:
    """theta(p) = f^-1(0, -i d_p) delta(p - p'), summed exactly over the eta grid."""
    row = _xi_independent(k, tol)
    p = k.pgrid.points() if p is None else np.asarray(p, dtype=float)
    eta = k.eta
    deta = k.pgrid.dual().step
    ph = np.exp(1j * np.multiply.outer(np.ravel(p) - p_prime, eta))
    return np.real(ph @ row * deta / (2.0 * np.pi)).reshape(np.shape(p))


def bohm_stargenfunction(GW: PhaseSpaceFunction, k: CohenKernel, tol: float = MASK_TOLERANCE) -> PhaseSpaceFunction:
    return f_stargenfunction(GW, k, tol)


class MomentumProbability(NamedTuple):
    p: np.ndarray            # evaluation points p'
    P1: np.ndarray           # sum_i w_i theta(p_i - p')
    edges: np.ndarray        # histogram bins of the guidance momenta
    P2: np.ndarray           # Bohm momentum histogram (mass per bin)


def momentum_probability(m: BohmMeasure, k: CohenKernel, p_prime: np.ndarray | None = None,
                         edges: np.ndarray | None = None, tol: float = 1e-6) -> MomentumProbability:
    """Momentum probability density from the Bohm momentum stargenfunction."""
    row = _xi_independent(k, tol)
    p_prime = k.pgrid.points() if p_prime is None else np.asarray(p_prime, dtype=float)
    eta, deta = k.eta, k.pgrid.dual().step
    # sum_i w_i theta(p_i - p') = sum_eta (d eta / 2 pi) row(eta) N0(eta) exp(-i eta p')
    N0 = np.exp(1j * np.multiply.outer(eta, m.momenta[:, 0])) @ m.weights
    P1 = np.real(np.exp(-1j * np.multiply.outer(np.ravel(p_prime), eta)) @ (row * N0)) * deta / (2 * np.pi)
    if edges is None:
        pts = k.pgrid.points()
        h = k.pgrid.step
        edges = np.concatenate([pts - h / 2, [pts[-1] + h / 2]])
    return MomentumProbability(p_prime, P1.reshape(np.shape(p_prime)), edges, m.momentum_histogram(edges))


def position_probability(m: BohmMeasure) -> np.ndarray:
    """Pairing with the position stargenfunction delta(x - x') at every node: R^2(x')."""
    return m.position_density()


def probability_bohm(m: BohmMeasure, GB: PhaseSpaceFunction) -> Probability:
    """sum_i w_i G_B(x_i, p_i) with G_B trigonometrically interpolated off the grid."""
    if m.dims != 1:
        raise ScopeError("gridded stargenfunctions are one-dimensional")
    c = fourier_coefficients(GB.samples, GB.xgrid.axes[0], GB.pgrid.axes[0])
    vals = trig_eval(c, GB.xgrid.axes[0], GB.pgrid.axes[0], m.positions[:, 0], m.momenta[:, 0])
    return _probability(np.sum(m.weights * vals))
