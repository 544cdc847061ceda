"""Test states sampled on spatial grids."""
from __future__ import annotations

from math import factorial
from typing import Sequence

import numpy as np
from numpy.polynomial import hermite

from .transforms import SpatialGrid, WaveFunction, check_support


def gaussian_component(x, x0: float, p0: float, dx: float, hbar: float = 1.0):
    """Unit-norm Gaussian packet centred at ``x0`` with mean momentum ``p0``."""
    x = np.asarray(x, dtype=float)
    return ((2.0 * np.pi * dx**2) ** -0.25
            * np.exp(-((x - x0) ** 2) / (4.0 * dx**2) + 1j * p0 * x / hbar))


def coherent_state(grid: SpatialGrid, x0=0.0, p0=0.0, dx=1.0, hbar=1.0, mass=1.0,
                   check=True) -> WaveFunction:
    if grid.dims != 1:
        raise ValueError("coherent_state is one-dimensional")
    psi = WaveFunction(grid, gaussian_component(grid.points(), x0, p0, dx, hbar), hbar, mass)
    if check:
        check_support(psi.samples)
    return psi.normalize()


def superposition_amplitude(x, components: Sequence[tuple[complex, float, float, float]],
                            hbar: float = 1.0):
    """Unnormalized sum of weighted Gaussian packets ``(c, x0, p0, dx)``."""
    return sum(c * gaussian_component(x, x0, p0, dx, hbar) for c, x0, p0, dx in components)


def superposition_state(grid: SpatialGrid, components, hbar=1.0, mass=1.0) -> WaveFunction:
    psi = WaveFunction(grid, superposition_amplitude(grid.points(), components, hbar), hbar, mass)
    check_support(psi.samples)
    return psi.normalize()


def oscillator_eigenstate(grid: SpatialGrid, n: int, hbar=1.0, mass=1.0, omega=1.0,
                          x0=0.0) -> WaveFunction:
    """n-th harmonic-oscillator eigenfunction (1D)."""
    if grid.dims != 1:
        raise ValueError("oscillator_eigenstate is one-dimensional")
    if n < 0:
        raise ValueError("n must be non-negative")
    s = np.sqrt(mass * omega / hbar)
    u = s * (grid.points() - x0)
    coef = np.zeros(n + 1)
    coef[n] = 1.0
    norm = (s**2 / np.pi) ** 0.25 / np.sqrt(2.0**n * factorial(n))
    psi = WaveFunction(grid, norm * hermite.hermval(u, coef) * np.exp(-u**2 / 2), hbar, mass)
    check_support(psi.samples)
    return psi


def vortex_state(grid: SpatialGrid, hbar=1.0, mass=1.0) -> WaveFunction:
    """psi ~ (x + i y) exp(-r^2 / 2) in 3D: an l = 1, m = 1 eigenstate."""
    if grid.dims != 3:
        raise ValueError("vortex_state needs a 3D grid")
    x, y, z = grid.mesh()
    psi = WaveFunction(grid, (x + 1j * y) * np.exp(-(x**2 + y**2 + z**2) / 2), hbar, mass)
    check_support(psi.samples)
    return psi.normalize()
