"""Operators acting on sampled wave functions with spectral derivatives.

Each factory returns a callable ``op(psi) -> ndarray`` giving the samples of
``A psi``; callables compose with :func:`compose`.
"""
from __future__ import annotations

from typing import Callable

import numpy as np

from .transforms import WaveFunction, laplacian, quadrature, spectral_derivative

Applier = Callable[[WaveFunction], np.ndarray]


def _as_psi(psi: WaveFunction, samples) -> WaveFunction:
    return psi.with_samples(samples)


def position(axis: int = 0) -> Applier:
    def op(psi):
        return psi.grid.mesh()[axis] * psi.samples
    return op


def momentum(axis: int = 0) -> Applier:
    def op(psi):
        return -1j * psi.hbar * spectral_derivative(psi.samples, psi.grid, axis=axis)
    return op


def multiply(V) -> Applier:
    V = np.asarray(V)

    def op(psi):
        return V * psi.samples
    return op


def kinetic() -> Applier:
    def op(psi):
        return -psi.hbar**2 / (2.0 * psi.mass) * laplacian(psi.samples, psi.grid)
    return op


def hamiltonian(V) -> Applier:
    T, U = kinetic(), multiply(V)

    def op(psi):
        return T(psi) + U(psi)
    return op


def angular_momentum(i: int) -> Applier:
    """L_i = -i hbar (x_j d_k - x_k d_j) with (i, j, k) cyclic; needs a 3D grid."""
    j, k = (i + 1) % 3, (i + 2) % 3

    def op(psi):
        if psi.grid.dims != 3:
            raise ValueError("angular momentum needs a 3D grid")
        X = psi.grid.mesh()
        w = psi.samples
        dk = spectral_derivative(w, psi.grid, axis=k)
        dj = spectral_derivative(w, psi.grid, axis=j)
        return -1j * psi.hbar * (X[j] * dk - X[k] * dj)
    return op


def l_squared() -> Applier:
    parts = [angular_momentum(i) for i in range(3)]

    def op(psi):
        return sum(L(_as_psi(psi, L(psi))) for L in parts)
    return op


def compose(*ops: Applier) -> Applier:
    """compose(A, B)(psi) = A(B(psi))."""
    def op(psi):
        out = psi
        for o in reversed(ops):
            out = _as_psi(psi, o(out))
        return out.samples
    return op


def expectation(psi: WaveFunction, op: Applier) -> complex:
    """<psi| A psi> by direct quadrature."""
    return complex(quadrature(np.conj(psi.samples) * op(psi), psi.grid))


def eigen_residual(psi: WaveFunction, op: Applier, value: float) -> float:
    """||A psi - a psi|| / ||psi||."""
    r = op(psi) - value * psi.samples
    return float(np.sqrt(quadrature(np.abs(r) ** 2, psi.grid)) / psi.norm())
