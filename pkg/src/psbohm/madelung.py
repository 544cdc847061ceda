"""Polar (R, S) decomposition of a wave function and the causal-interpretation fields."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.integrate import cumulative_simpson

from .errors import GridError, MaskError, PSBohmError
from .transforms import SpatialGrid, WaveFunction, quadrature, spectral_derivative

EPS_NODE = 1e-6
MAX_MASKED_MASS = 0.5


def _safe_div(num, den):
    out = np.zeros(np.broadcast(num, den).shape, dtype=np.result_type(num, den, float))
    np.divide(num, den, out=out, where=den > 0)
    return out


@dataclass
class MadelungFields:
    grid: SpatialGrid
    R: np.ndarray
    gradS: np.ndarray          # shape (dims,) + grid.shape, momentum units
    S: np.ndarray
    Q: np.ndarray
    density: np.ndarray
    node_mask: np.ndarray
    phase: np.ndarray          # psi / |psi|, 0 on exact zeros
    density_Q: np.ndarray      # density * Q without masking
    psi: WaveFunction
    eps_node: float = EPS_NODE
    path_dependent: bool = False
    info: dict = field(default_factory=dict)

    @property
    def hbar(self) -> float:
        return self.psi.hbar

    @property
    def mass(self) -> float:
        return self.psi.mass

    @property
    def masked_fraction(self) -> float:
        """Fraction of grid nodes inside the node mask."""
        return float(self.node_mask.mean())

    @property
    def masked_mass(self) -> float:
        """Probability carried by masked nodes (the deficit of every masked sum)."""
        return float(quadrature(np.where(self.node_mask, self.density, 0.0), self.grid))


def _integrate_run(g: np.ndarray, step: float, start: int) -> np.ndarray:
    """Cumulative integral along the last axis of ``g`` from index ``start``."""
    out = np.zeros_like(g)
    n = g.shape[-1]
    for lo, hi, sgn in ((start, n, 1.0), (start, -1, -1.0)):
        seg = g[..., lo:hi if hi >= 0 else None:int(sgn)]
        if seg.shape[-1] >= 3:
            vals = cumulative_simpson(seg, dx=step, axis=-1, initial=0.0)
        elif seg.shape[-1] == 2:
            vals = np.stack([np.zeros_like(seg[..., 0]), 0.5 * step * seg.sum(axis=-1)], axis=-1)
        else:
            vals = np.zeros_like(seg)
        out[..., lo:hi if hi >= 0 else None:int(sgn)] = sgn * vals
    return out


def _line_integrate(g: np.ndarray, ok: np.ndarray, step: float, axis: int, ref: int) -> np.ndarray:
    """Integral of ``g`` along ``axis`` measured from index ``ref`` (zero there).

    Each maximal unmasked run is integrated on its own so the quadrature
    never straddles a mask edge; S is held constant across masked gaps.
    """
    g = np.moveaxis(g, axis, -1)
    ok = np.moveaxis(ok, axis, -1)
    lines_g = g.reshape(-1, g.shape[-1])
    lines_ok = ok.reshape(-1, ok.shape[-1])
    out = np.zeros_like(lines_g)
    n = g.shape[-1]
    for li in range(lines_g.shape[0]):
        row_ok = lines_ok[li]
        if row_ok.all():
            out[li] = _integrate_run(lines_g[li], step, ref)
            continue
        if not row_ok.any():
            continue
        # runs of unmasked nodes: [a, b)
        edges = np.flatnonzero(np.diff(np.concatenate([[0], row_ok.astype(np.int8), [0]])))
        runs = list(zip(edges[::2], edges[1::2]))
        home = next((k for k, (a, b) in enumerate(runs) if a <= ref < b), None)
        if home is None:
            home = int(np.argmin([min(abs(a - ref), abs(b - 1 - ref)) for a, b in runs]))
        S = np.zeros(n)
        a, b = runs[home]
        S[a:b] = _integrate_run(lines_g[li, a:b], step, min(max(ref, a), b - 1) - a)
        for k in range(home + 1, len(runs)):
            a, b = runs[k]
            S[a:b] = S[runs[k - 1][1] - 1] + _integrate_run(lines_g[li, a:b], step, 0)
        for k in range(home - 1, -1, -1):
            a, b = runs[k]
            S[a:b] = S[runs[k + 1][0]] + _integrate_run(lines_g[li, a:b], step, b - a - 1)
        out[li] = S
    return np.moveaxis(out.reshape(g.shape), -1, axis)


def _reconstruct_action(gradS: np.ndarray, ok: np.ndarray, grid: SpatialGrid,
                        ref: tuple[int, ...], order: Sequence[int]) -> np.ndarray:
    """Integrate gradS along axis-ordered paths starting at node ``ref``."""
    S = np.zeros(grid.shape)
    for done, ax in enumerate(order):
        # integrate along ax on the sub-lattice where later axes sit at ref
        sl = [slice(None)] * grid.dims
        for later in order[done + 1:]:
            sl[later] = slice(ref[later], ref[later] + 1)
        sl = tuple(sl)
        base_idx = list(sl)
        base_idx[ax] = slice(ref[ax], ref[ax] + 1)
        base = S[tuple(base_idx)]
        S[sl] = base + _line_integrate(gradS[ax][sl], ok[sl], grid.axes[ax].step, ax, ref[ax])
    return S


def decompose(psi: WaveFunction, eps_node: float = EPS_NODE) -> MadelungFields:
    """Split ``psi`` into amplitude, phase gradient, action, quantum potential."""
    grid, hbar, m = psi.grid, psi.hbar, psi.mass
    w = psi.samples
    density = np.abs(w) ** 2
    peak = density.max()
    if peak == 0:
        raise PSBohmError("wave function is identically zero")
    mask = density < eps_node * peak
    masked_mass = float(quadrature(np.where(mask, density, 0.0), grid) / quadrature(density, grid))
    if masked_mass > MAX_MASKED_MASS:
        raise MaskError(f"{masked_mass:.2%} of the probability lies in masked nodes",
                        occupancy=masked_mass)

    dw = [spectral_derivative(w, grid, axis=i) for i in range(grid.dims)]
    d2w = [spectral_derivative(w, grid, axis=i, order=2) for i in range(grid.dims)]
    current = np.array([np.imag(np.conj(w) * d) for d in dw])         # Im psi* grad psi
    gradS = hbar * _safe_div(current, density[None, ...])
    gradS[:, mask] = 0.0

    # Q from the density form: P itself is smooth even where |psi| has nodes
    dP = [2.0 * np.real(np.conj(w) * d) for d in dw]
    lapP = sum(2.0 * np.real(np.conj(w) * d2) + 2.0 * np.abs(d) ** 2 for d, d2 in zip(dw, d2w))
    gradP2 = sum(d**2 for d in dP)
    density_Q = -hbar**2 / (4.0 * m) * (lapP - 0.5 * _safe_div(gradP2, density))
    Q = np.where(mask, 0.0, _safe_div(density_Q, density))

    R = np.sqrt(density)
    phase = np.where(density > 0, w / np.where(R > 0, R, 1.0), 0.0)

    ref = np.unravel_index(np.argmax(density), grid.shape)
    order = tuple(range(grid.dims))
    S = _reconstruct_action(gradS, ~mask, grid, ref, order)
    path_dependent = False
    if grid.dims > 1:
        S_alt = _reconstruct_action(gradS, ~mask, grid, ref, order[::-1])
        path_dependent = bool(np.max(np.abs((S - S_alt)[~mask])) > 1e-6 * max(hbar, 1.0))
    else:
        inner = np.nonzero(~mask)[0]
        path_dependent = bool(mask[inner.min():inner.max() + 1].any())
    S = np.where(mask, 0.0, S)

    fields = MadelungFields(grid, np.where(mask, 0.0, R), gradS, S, Q, density, mask, phase,
                            density_Q, psi, eps_node, path_dependent)
    fields.info = {"masked_fraction": fields.masked_fraction, "masked_mass": masked_mass}
    return fields


def quantum_potential_from_amplitude(fields: MadelungFields) -> np.ndarray:
    """Q = -hbar^2 / 2m * lap(R) / R with spectral derivatives of R (nodeless states)."""
    R = np.sqrt(fields.density)
    lapR = sum(spectral_derivative(R, fields.grid, axis=i, order=2) for i in range(fields.grid.dims))
    return np.where(fields.node_mask, 0.0,
                    -fields.hbar**2 / (2.0 * fields.mass) * _safe_div(lapR, R))


def quantum_potential_mean(fields: MadelungFields) -> float:
    """<Q> = integral of density * Q.

    The integrand is evaluated without division by the density, so every
    grid node contributes and the node mask introduces no deficit.
    """
    return float(quadrature(fields.density_Q, fields.grid))


def quantum_potential_gradient_weighted(fields: MadelungFields) -> np.ndarray:
    """density * grad Q on every node (shape (dims,) + grid.shape).

    Uses grad Q = grad(density_Q / P) expanded so that no masked field is
    differentiated: grad(PQ) - Q grad P.
    """
    grid = fields.grid
    out = []
    dens = fields.density
    Q_full = _safe_div(fields.density_Q, dens)
    for i in range(grid.dims):
        d_PQ = spectral_derivative(fields.density_Q, grid, axis=i)
        dP = spectral_derivative(dens, grid, axis=i)
        out.append(d_PQ - Q_full * dP)
    return np.array(out)


def madelung_residuals(series: Sequence[MadelungFields], dt: float, V: np.ndarray) -> tuple[float, float]:
    """Sup-norm residuals of the continuity and quantum Hamilton-Jacobi equations.

    Centered differences in time over every interior member of ``series``;
    spatial derivatives are spectral.  Only nodes unmasked at all three
    times enter the Hamilton-Jacobi residual.
    """
    if len(series) < 3:
        raise ValueError("need at least three consecutive time slices")
    grid = series[0].grid
    if any(f.grid != grid for f in series):
        raise GridError("time slices are on different grids")
    V = np.asarray(V, dtype=float)
    cont = hj = 0.0
    for a, b, c in zip(series[:-2], series[1:-1], series[2:]):
        w = b.psi.samples
        m, hbar = b.mass, b.hbar
        dPdt = (c.density - a.density) / (2.0 * dt)
        div = 0.0
        for i in range(grid.dims):
            flux = hbar * np.imag(np.conj(w) * spectral_derivative(w, grid, axis=i)) / m
            div = div + spectral_derivative(flux, grid, axis=i)
        cont = max(cont, float(np.max(np.abs(dPdt + div))))
        ok = ~(a.node_mask | b.node_mask | c.node_mask)
        dSdt = hbar * np.angle(c.phase * np.conj(a.phase)) / (2.0 * dt)
        kin = np.sum(b.gradS**2, axis=0) / (2.0 * m)
        r = dSdt + kin + V + b.Q
        hj = max(hj, float(np.max(np.abs(r[ok]))))
    return cont, hj
