import numpy as np
import pytest

from psbohm.errors import PSBohmError
from psbohm.madelung import (decompose, madelung_residuals, quantum_potential_from_amplitude,
                             quantum_potential_mean)
from psbohm.states import coherent_state, oscillator_eigenstate
from psbohm.transforms import SpatialGrid, WaveFunction, forward_fourier, quadrature


@pytest.fixture(scope="module")
def grid():
    return SpatialGrid.uniform(-20.0, 20.0, 512)


def free_packet(grid, t, p0=0.8, dx=1.0, hbar=1.0, m=1.0):
    """Exact free evolution of a Gaussian packet starting at x = 0."""
    x = grid.points()
    tau = 1 + 1j * hbar * t / (2 * m * dx**2)
    psi = ((2 * np.pi * dx**2) ** -0.25 / np.sqrt(tau)
           * np.exp(-(x - p0 * t / m) ** 2 / (4 * dx**2 * tau)
                    + 1j * (p0 * x - p0**2 * t / (2 * m)) / hbar))
    return WaveFunction(grid, psi, hbar, m)


def test_coherent_fields(grid):
    p0 = 1.3
    f = decompose(coherent_state(grid, x0=0.5, p0=p0))
    ok = ~f.node_mask
    assert np.max(np.abs(f.gradS[0][ok] - p0)) < 1e-8
    x = grid.points()
    S = f.S[ok] - p0 * x[ok]
    assert np.ptp(S) < 1e-8
    assert np.max(np.abs(f.Q[ok] - (0.25 - (x[ok] - 0.5) ** 2 / 8))) < 1e-8
    assert abs(quadrature(f.density, grid) - 1) < 1e-10


def test_real_state_has_zero_phase_gradient(grid):
    f = decompose(oscillator_eigenstate(grid, 0))
    assert np.max(np.abs(f.gradS)) < 1e-12


def test_mean_quantum_potential(grid):
    p0 = 0.9
    psi = coherent_state(grid, p0=p0)
    f = decompose(psi)
    assert abs(quantum_potential_mean(f) - 1 / 8) < 1e-12
    # momentum-space route: <p^2>/2m - p0^2/2m
    k = grid.dual().points()
    phi2 = np.abs(forward_fourier(psi.samples, grid.axes[0])) ** 2
    p2 = np.sum(k**2 * phi2) * grid.dual().step
    assert abs((p2 - p0**2) / 2 - quantum_potential_mean(f)) < 1e-10


@pytest.mark.parametrize("s", [0.5, 2.0])
def test_mean_quantum_potential_scaling(grid, s):
    q1 = quantum_potential_mean(decompose(coherent_state(grid, dx=1.0)))
    qs = quantum_potential_mean(decompose(coherent_state(grid, dx=s)))
    assert qs == pytest.approx(q1 / s**2, rel=1e-10)


def test_gauge_invariance(grid):
    psi = coherent_state(grid, x0=-1.0, p0=0.4, dx=0.9)
    a = decompose(psi)
    b = decompose(psi.with_samples(psi.samples * np.exp(0.77j)))
    assert np.max(np.abs(a.gradS - b.gradS)) < 1e-12
    ok = ~a.node_mask
    bulk = a.density > 1e-3 * a.density.max()
    assert np.max(np.abs(a.Q - b.Q)[bulk]) < 1e-12
    # roundoff grows like 1/density towards the mask edge
    assert np.max(np.abs(a.Q - b.Q)[ok]) < 1e-10
    assert np.max(np.abs(a.density - b.density)) < 1e-12
    ok = ~a.node_mask
    assert np.ptp((a.S - b.S)[ok]) < 1e-10


def test_two_forms_of_quantum_potential_agree(grid):
    f = decompose(coherent_state(grid, x0=0.3, p0=-0.5, dx=1.2))
    ok = ~f.node_mask
    assert np.max(np.abs(quantum_potential_from_amplitude(f)[ok] - f.Q[ok])) < 1e-8


def test_zero_state_rejected(grid):
    with pytest.raises(PSBohmError):
        decompose(WaveFunction(grid, np.zeros(512)))


def test_excited_state_is_path_dependent(grid):
    f = decompose(oscillator_eigenstate(grid, 1))
    assert f.path_dependent
    assert f.node_mask[256]


def test_stationary_residuals(grid):
    psi0 = oscillator_eigenstate(grid, 0)
    dt = 1e-3
    series = [decompose(psi0.with_samples(psi0.samples * np.exp(-0.5j * n * dt))) for n in range(3)]
    cont, hj = madelung_residuals(series, dt, grid.points() ** 2 / 2)
    assert cont < 1e-6 and hj < 1e-6


def test_free_packet_residuals(grid):
    dt = 1e-3
    series = [decompose(free_packet(grid, n * dt)) for n in range(3)]
    cont, hj = madelung_residuals(series, dt, np.zeros(512))
    assert cont < 1e-5 and hj < 1e-5
