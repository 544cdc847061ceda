"""Uniform grids, continuous-Fourier conventions, quadrature and spectral tools.

Every transform here uses the symmetric convention

    W(k) = (2 pi)^(-1/2) * integral w(x) exp(s i k x) dx,     s = -1 by default,

sampled on the centered dual grid (spacing 2 pi / (step * count)).  The
discrete pair is exactly invertible, so callers attach any extra 2 pi
prefactors explicitly.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import GridError, SupportError

SQRT_2PI = np.sqrt(2.0 * np.pi)
SUPPORT_THRESHOLD = 1e-8


def _is_pow2(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class Axis:
    """One uniform axis: ``min + step * arange(count)``."""

    min: float
    step: float
    count: int

    def __post_init__(self):
        if not _is_pow2(int(self.count)) or self.count < 16:
            raise GridError(f"axis count must be a power of two >= 16, got {self.count}")
        if not self.step > 0:
            raise GridError(f"axis step must be positive, got {self.step}")

    @property
    def points(self) -> np.ndarray:
        return self.min + self.step * np.arange(self.count)

    @property
    def span(self) -> float:
        return self.step * self.count

    @property
    def max(self) -> float:
        return self.min + self.step * (self.count - 1)

    def dual(self) -> "Axis":
        dk = 2.0 * np.pi / self.span
        return Axis(-0.5 * self.count * dk, dk, self.count)

    def wavenumbers(self) -> np.ndarray:
        """FFT-ordered angular wavenumbers (for spectral derivatives/shifts)."""
        return 2.0 * np.pi * np.fft.fftfreq(self.count, d=self.step)

    def index_of(self, value: float) -> int:
        i = int(round((value - self.min) / self.step))
        if not 0 <= i < self.count:
            raise GridError(f"value {value} lies outside the axis")
        return i


@dataclass(frozen=True)
class SpatialGrid:
    """Tensor-product uniform grid in 1 to 3 dimensions."""

    axes: tuple[Axis, ...]

    def __post_init__(self):
        if not 1 <= len(self.axes) <= 3:
            raise GridError("grids must have 1 to 3 dimensions")

    @classmethod
    def uniform(cls, lo, hi, count) -> "SpatialGrid":
        """Grid on ``[lo, hi)`` per axis; scalars broadcast to 1D."""
        lo, hi, count = np.atleast_1d(lo), np.atleast_1d(hi), np.atleast_1d(count)
        dims = max(len(lo), len(hi), len(count))
        lo, hi, count = (np.broadcast_to(a, (dims,)) for a in (lo, hi, count))
        axes = tuple(Axis(float(a), float(b - a) / int(n), int(n))
                     for a, b, n in zip(lo, hi, count))
        return cls(axes)

    @classmethod
    def centered(cls, step, count, dims: int = 1) -> "SpatialGrid":
        return cls(tuple(Axis(-0.5 * count * step, float(step), int(count)) for _ in range(dims)))

    @property
    def dims(self) -> int:
        return len(self.axes)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(a.count for a in self.axes)

    @property
    def volume_element(self) -> float:
        return float(np.prod([a.step for a in self.axes]))

    @property
    def step(self) -> float:
        """Step of a 1D grid."""
        return self.axes[0].step

    def points(self, axis: int = 0) -> np.ndarray:
        return self.axes[axis].points

    def mesh(self) -> list[np.ndarray]:
        return np.meshgrid(*[a.points for a in self.axes], indexing="ij")

    def dual(self) -> "SpatialGrid":
        return SpatialGrid(tuple(a.dual() for a in self.axes))

    def is_centered(self) -> bool:
        return all(np.isclose(a.min, -0.5 * a.count * a.step, rtol=0, atol=1e-12 * a.step)
                   for a in self.axes)

    def fingerprint(self) -> str:
        return ";".join(f"[{a.min:.17g},{a.step:.17g},{a.count}]" for a in self.axes)


@dataclass
class WaveFunction:
    grid: SpatialGrid
    samples: np.ndarray
    hbar: float = 1.0
    mass: float = 1.0

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=complex)
        if self.samples.shape != self.grid.shape:
            raise GridError(f"samples shape {self.samples.shape} != grid shape {self.grid.shape}")
        if not (self.hbar > 0 and self.mass > 0):
            raise ValueError("hbar and mass must be positive")

    def norm(self) -> float:
        return float(np.sqrt(quadrature(np.abs(self.samples) ** 2, self.grid)))

    def normalize(self) -> "WaveFunction":
        n = self.norm()
        if n == 0:
            raise ValueError("cannot normalize the zero wave function")
        return WaveFunction(self.grid, self.samples / n, self.hbar, self.mass)

    def with_samples(self, samples) -> "WaveFunction":
        return WaveFunction(self.grid, samples, self.hbar, self.mass)


@dataclass
class PhaseSpaceFunction:
    """Samples F(x, p) on ``xgrid x pgrid`` (shape ``xgrid.shape + pgrid.shape``)."""

    xgrid: SpatialGrid
    pgrid: SpatialGrid
    samples: np.ndarray
    hbar: float = 1.0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.xgrid.dims != self.pgrid.dims:
            raise GridError("x and p grids must have the same dimension")
        self.samples = np.asarray(self.samples)
        if self.samples.shape != self.xgrid.shape + self.pgrid.shape:
            raise GridError("phase-space samples do not match the grids")

    @property
    def volume_element(self) -> float:
        return self.xgrid.volume_element * self.pgrid.volume_element

    def integral(self) -> complex:
        return np.sum(self.samples) * self.volume_element

    def with_samples(self, samples, **meta) -> "PhaseSpaceFunction":
        return PhaseSpaceFunction(self.xgrid, self.pgrid, samples, self.hbar, dict(self.meta, **meta))


def check_support(samples: np.ndarray, threshold: float = SUPPORT_THRESHOLD) -> float:
    """Return the boundary-to-peak ratio; raise SupportError above ``threshold``."""
    a = np.abs(samples)
    peak = a.max()
    if peak == 0:
        raise SupportError("samples are identically zero")
    edge = 0.0
    for ax in range(a.ndim):
        edge = max(edge, np.take(a, 0, axis=ax).max(), np.take(a, -1, axis=ax).max())
    ratio = edge / peak
    if ratio > threshold:
        raise SupportError(f"boundary value {ratio:.3e} x peak exceeds {threshold:.1e}")
    return ratio


def _sign_vector(n: int) -> np.ndarray:
    return np.where(np.arange(n) % 2 == 0, 1.0, -1.0)


def _bcast(v: np.ndarray, axis: int, ndim: int) -> np.ndarray:
    shape = [1] * ndim
    shape[axis] = v.size
    return v.reshape(shape)


def _dual_phase(axis_grid: Axis, sign: int) -> np.ndarray:
    """exp(sign i k x_min) on the dual points, with the argument reduced mod 2 pi.

    k x_min can reach thousands of radians; reducing (j - n/2) x_min / L
    exactly first keeps the phase at machine precision.
    """
    n = axis_grid.count
    turns = np.mod((np.arange(n) - n // 2) * (axis_grid.min / axis_grid.span), 1.0)
    return np.exp(sign * 2j * np.pi * turns)


def forward_fourier(w: np.ndarray, axis_grid: Axis, axis: int = 0, sign: int = -1) -> np.ndarray:
    """Continuous transform of ``w`` along ``axis`` onto ``axis_grid.dual()``."""
    w = np.asarray(w, dtype=complex)
    n = axis_grid.count
    alt = _bcast(_sign_vector(n), axis, w.ndim)
    if sign < 0:
        s = np.fft.fft(w * alt, axis=axis)
    else:
        s = np.fft.ifft(w * alt, axis=axis) * n
    phase = _bcast(_dual_phase(axis_grid, sign), axis, w.ndim)
    return s * phase * (axis_grid.step / SQRT_2PI)


def inverse_fourier(W: np.ndarray, axis_grid: Axis, axis: int = 0, sign: int = -1) -> np.ndarray:
    """Exact inverse of :func:`forward_fourier` (``axis_grid`` is the spatial axis)."""
    W = np.asarray(W, dtype=complex)
    n = axis_grid.count
    dual = axis_grid.dual()
    alt = _bcast(_sign_vector(n), axis, W.ndim)
    phase = _bcast(_dual_phase(axis_grid, -sign), axis, W.ndim)
    if sign < 0:
        s = np.fft.ifft(W * phase, axis=axis) * n
    else:
        s = np.fft.fft(W * phase, axis=axis)
    return s * alt * (dual.step / SQRT_2PI)


def fourier_nd(w: np.ndarray, grid: SpatialGrid, first_axis: int = 0, sign: int = -1,
               inverse: bool = False) -> np.ndarray:
    """Apply the 1D transform along each axis of ``grid`` starting at ``first_axis``."""
    out = w
    op = inverse_fourier if inverse else forward_fourier
    for i, ax in enumerate(grid.axes):
        out = op(out, ax, axis=first_axis + i, sign=sign)
    return out


def quadrature(w: np.ndarray, grid: SpatialGrid):
    """Uniform-weight sum times the volume element (trapezoid rule for periodic data)."""
    return np.sum(w) * grid.volume_element


def spectral_derivative(w: np.ndarray, grid: SpatialGrid, axis: int = 0, order: int = 1) -> np.ndarray:
    """Fourier derivative of ``order`` along ``axis``; Nyquist mode dropped for odd orders."""
    ax = grid.axes[axis]
    k = ax.wavenumbers()
    mult = (1j * k) ** order
    if order % 2 == 1:
        mult[ax.count // 2] = 0.0
    w = np.asarray(w)
    out = np.fft.ifft(np.fft.fft(w, axis=axis) * _bcast(mult, axis, w.ndim), axis=axis)
    return out.real if np.isrealobj(w) else out


def gradient(w: np.ndarray, grid: SpatialGrid) -> list[np.ndarray]:
    return [spectral_derivative(w, grid, axis=i) for i in range(grid.dims)]


def laplacian(w: np.ndarray, grid: SpatialGrid) -> np.ndarray:
    return sum(spectral_derivative(w, grid, axis=i, order=2) for i in range(grid.dims))


def shift_samples(w: np.ndarray, grid: SpatialGrid, offsets, axis: int = 0) -> np.ndarray:
    """Return ``w(x + a)`` along ``axis`` for each offset ``a`` (new leading axis).

    The shift is a Fourier phase, so the result is periodic; callers rely on
    the declared-support condition to make the wrap negligible.
    """
    ax = grid.axes[axis]
    offsets = np.atleast_1d(np.asarray(offsets, dtype=float))
    if np.any(np.abs(offsets) > 0.5 * ax.span * (1 + 1e-12)):
        raise GridError("shift exceeds half the grid span (aliasing)")
    w = np.asarray(w, dtype=complex)
    k = ax.wavenumbers()
    # Nyquist mode has no well-defined shift phase
    k_eff = k.copy()
    k_eff[ax.count // 2] = 0.0
    spec = np.fft.fft(w, axis=axis)
    phase = np.exp(1j * np.multiply.outer(offsets, k_eff))
    phase = phase.reshape((offsets.size,) + tuple(ax.count if i == axis else 1 for i in range(w.ndim)))
    return np.fft.ifft(spec[None, ...] * phase, axis=axis + 1)


def shift_sample(psi: WaveFunction, offset: Sequence[float] | float) -> np.ndarray:
    """Return ``psi(x + offset)`` sampled on ``psi.grid`` via Fourier phases."""
    offset = np.atleast_1d(np.asarray(offset, dtype=float))
    if offset.size != psi.grid.dims:
        raise GridError("offset dimension does not match the grid")
    out = psi.samples
    for i, a in enumerate(offset):
        if a != 0.0:
            out = shift_samples(out, psi.grid, [a], axis=i)[0]
    return np.array(out, dtype=complex)


def fourier_coefficients(w: np.ndarray, xaxis: Axis, paxis: Axis) -> np.ndarray:
    """Coefficients c(xi, eta) with w(x, p) = sum c * exp(i xi x + i eta p) exactly at nodes."""
    c = forward_fourier(forward_fourier(w, xaxis, axis=0), paxis, axis=1)
    return c * (xaxis.dual().step * paxis.dual().step / (2.0 * np.pi))


def trig_eval(coeffs: np.ndarray, xaxis: Axis, paxis: Axis, x: np.ndarray, p: np.ndarray,
              chunk: int = 4096) -> np.ndarray:
    """Evaluate the trigonometric interpolant of :func:`fourier_coefficients` at points."""
    xi, eta = xaxis.dual().points, paxis.dual().points
    x, p = np.ravel(x), np.ravel(p)
    out = np.empty(x.size, dtype=complex)
    for s in range(0, x.size, chunk):
        ex = np.exp(1j * np.multiply.outer(x[s:s + chunk], xi))
        ep = np.exp(1j * np.multiply.outer(p[s:s + chunk], eta))
        out[s:s + chunk] = np.einsum("im,mn,in->i", ex, coeffs, ep, optimize=True)
    return out


def trig_eval_1d(samples: np.ndarray, axis_grid: Axis, points: np.ndarray) -> np.ndarray:
    """Trigonometric interpolation of 1D ``samples`` at arbitrary ``points``."""
    k = axis_grid.dual()
    c = forward_fourier(samples, axis_grid) * (k.step / SQRT_2PI)
    ex = np.exp(1j * np.multiply.outer(np.ravel(points), k.points))
    return (ex @ c).reshape(np.shape(points))
