"""Closed-form coherent-state reference values.

Nothing here touches a grid or another psbohm module; these functions are
the trust anchor the numerical pipelines are checked against.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class CoherentStateParams:
    x0: float = 0.0
    p0: float = 0.0
    dx: float = 1.0
    hbar: float = 1.0
    mass: float = 1.0

    def __post_init__(self):
        vals = (self.x0, self.p0, self.dx, self.hbar, self.mass)
        if not all(math.isfinite(v) for v in vals):
            raise ValueError("coherent-state parameters must be finite")
        if not (self.dx > 0 and self.hbar > 0 and self.mass > 0):
            raise ValueError("dx, hbar and mass must be strictly positive")


def oracle_psi(c: CoherentStateParams, x):
    x = np.asarray(x, dtype=float)
    amp = (2.0 * np.pi * c.dx**2) ** -0.25
    return amp * np.exp(-((x - c.x0) ** 2) / (4.0 * c.dx**2) + 1j * c.p0 * x / c.hbar)


def oracle_density(c: CoherentStateParams, x):
    x = np.asarray(x, dtype=float)
    return np.exp(-((x - c.x0) ** 2) / (2.0 * c.dx**2)) / np.sqrt(2.0 * np.pi * c.dx**2)


def oracle_phase_gradient(c: CoherentStateParams, x):
    """d(arg psi)/dx; constant p0 / hbar."""
    return np.full_like(np.asarray(x, dtype=float), c.p0 / c.hbar)


def oracle_wigner(c: CoherentStateParams, x, p):
    x, p = np.asarray(x, dtype=float), np.asarray(p, dtype=float)
    return np.exp(-((x - c.x0) ** 2) / (2.0 * c.dx**2)
                  - 2.0 * c.dx**2 * (p - c.p0) ** 2 / c.hbar**2) / (np.pi * c.hbar)


def oracle_kernel(c: CoherentStateParams, xi, eta):
    """Bohm kernel of the coherent state; independent of ``xi``."""
    eta = np.asarray(eta, dtype=float)
    xi = np.asarray(xi, dtype=float)
    return np.exp(c.hbar**2 * eta**2 / (8.0 * c.dx**2)) * np.ones_like(xi + eta)


def oracle_bohm_distribution(c: CoherentStateParams, x):
    """Return (spatial weight density, momentum) of the Bohm measure."""
    dens = oracle_density(c, x)
    return dens, np.full_like(dens, c.p0)


def oracle_quantum_potential(c: CoherentStateParams, x):
    x = np.asarray(x, dtype=float)
    h2m = c.hbar**2 / c.mass
    return h2m / (4.0 * c.dx**2) - h2m * (x - c.x0) ** 2 / (8.0 * c.dx**4)


def oracle_quantum_potential_gradient(c: CoherentStateParams, x):
    x = np.asarray(x, dtype=float)
    return -c.hbar**2 * (x - c.x0) / (4.0 * c.mass * c.dx**4)


def oracle_mean_quantum_potential(c: CoherentStateParams) -> float:
    return c.hbar**2 / (8.0 * c.mass * c.dx**2)


def oracle_momentum_stargen(c: CoherentStateParams, p, p_prime):
    p = np.asarray(p, dtype=float)
    a = 2.0 * c.dx**2 / c.hbar**2
    return np.sqrt(a / np.pi) * np.exp(-a * (p - p_prime) ** 2)


def oracle_momentum_stargen_derivative(c: CoherentStateParams, p, p_prime):
    a = 2.0 * c.dx**2 / c.hbar**2
    return -2.0 * a * (np.asarray(p, dtype=float) - p_prime) * oracle_momentum_stargen(c, p, p_prime)


def oracle_momentum_probability(c: CoherentStateParams, p_prime):
    return oracle_momentum_stargen(c, p_prime, c.p0)


def oracle_momentum_amplitude(c: CoherentStateParams, p):
    """Fourier transform phi(p) of the coherent state (unit L2 norm in p)."""
    p = np.asarray(p, dtype=float)
    a = 2.0 * c.dx**2 / c.hbar**2
    return ((a / np.pi) ** 0.25 * np.exp(-a * (p - c.p0) ** 2 / 2.0)
            * np.exp(-1j * (p - c.p0) * c.x0 / c.hbar))


def oracle_center(c: CoherentStateParams, t, omega: float = 1.0):
    """Classical centre (x(t), p(t)) in the harmonic well of frequency ``omega``."""
    t = np.asarray(t, dtype=float)
    m = c.mass
    x = c.x0 * np.cos(omega * t) + c.p0 / (m * omega) * np.sin(omega * t)
    p = c.p0 * np.cos(omega * t) - m * omega * c.x0 * np.sin(omega * t)
    return x, p
