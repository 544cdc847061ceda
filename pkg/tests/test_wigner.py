import numpy as np
import pytest
import sympy as sp

from psbohm import gaussian_oracle as go
from psbohm.errors import GridError, ScopeError
from psbohm.states import coherent_state, oscillator_eigenstate
from psbohm.transforms import SpatialGrid
from psbohm.wigner import (PolySymbol, default_pgrid, expectation_weyl, marginals, p, position_delta,
                           probability_weyl, weyl_symbol, wigner_transform, x)


@pytest.fixture(scope="module")
def grid():
    return SpatialGrid.uniform(-20.0, 20.0, 512)


def mesh(F):
    return np.meshgrid(F.xgrid.points(), F.pgrid.points(), indexing="ij")


@pytest.mark.parametrize("x0,p0,dx", [(0.0, 0.0, 1.0), (0.7, -1.1, 1.0), (-1.5, 0.4, 0.8)])
def test_coherent_wigner_matches_oracle(grid, x0, p0, dx):
    c = go.CoherentStateParams(x0=x0, p0=p0, dx=dx)
    F = wigner_transform(coherent_state(grid, x0=x0, p0=p0, dx=dx))
    assert np.max(np.abs(F.samples - go.oracle_wigner(c, *mesh(F)))) < 1e-8
    assert F.meta["imag_residue"] < 1e-12
    assert abs(F.meta["norm"] - 1) < 1e-8


def test_origin_value(grid):
    F = wigner_transform(coherent_state(grid))
    assert F.samples.max() == pytest.approx(1 / np.pi, abs=1e-12)


@pytest.mark.parametrize("n", [0, 1, 2])
def test_marginals(grid, n):
    psi = oscillator_eigenstate(grid, n)
    F = wigner_transform(psi)
    px_, pp_ = marginals(F)
    assert np.max(np.abs(px_ - np.abs(psi.samples) ** 2)) < 1e-8
    # momentum-space eigenfunctions of the oscillator are (-i)^n times the same Hermite functions
    phi = oscillator_eigenstate(F.pgrid, n)
    assert np.max(np.abs(pp_ - np.abs(phi.samples) ** 2)) < 1e-8


def test_excited_state_is_negative(grid):
    F = wigner_transform(oscillator_eigenstate(grid, 1))
    assert F.meta["min"] < 0
    # W_1(0, 0) = -1 / (pi hbar)
    i, j = grid.axes[0].index_of(0.0), F.pgrid.axes[0].index_of(0.0)
    assert F.samples[i, j] == pytest.approx(-1 / np.pi, abs=1e-10)


def test_fine_momentum_grid_rejected(grid):
    psi = coherent_state(grid)
    with pytest.raises(GridError):
        wigner_transform(psi, SpatialGrid.centered(0.5 * default_pgrid(grid).step, 512))


def test_wide_state_rejected_for_wraparound():
    g = SpatialGrid.uniform(-10.0, 10.0, 256)
    with pytest.raises(GridError):
        wigner_transform(coherent_state(g, dx=1.0))


def test_weyl_symbols():
    Lz = weyl_symbol("angular_momentum", axis=2)
    X, Y, _ = sp.symbols("x y z", real=True)
    PX, PY, _ = sp.symbols("px py pz", real=True)
    assert Lz.equals(X * PY - Y * PX)
    assert weyl_symbol("potential", V=x**2).equals(x**2)
    L2 = weyl_symbol("L2", hbar=1.0)
    assert L2.p_degree() == 2
    assert sp.expand(L2.expr).subs({s: 0 for s in L2.expr.free_symbols}) == pytest.approx(-1.5)
    with pytest.raises(ScopeError):
        weyl_symbol("momentum", expr=p**3)
    with pytest.raises(ScopeError):
        weyl_symbol("parity")


def test_projector_symbol(grid):
    c = go.CoherentStateParams(x0=0.3, p0=0.2)
    G = weyl_symbol("projector", state=coherent_state(grid, x0=0.3, p0=0.2))
    assert np.max(np.abs(G.samples - 2 * np.pi * go.oracle_wigner(c, *mesh(G)))) < 1e-8


def test_expectations(grid):
    F = wigner_transform(coherent_state(grid, x0=0.4, p0=1.3))
    assert expectation_weyl(F, PolySymbol(1)) == pytest.approx(1, abs=1e-10)
    assert expectation_weyl(F, PolySymbol(p)) == pytest.approx(1.3, abs=1e-10)
    F0 = wigner_transform(oscillator_eigenstate(grid, 0))
    H = weyl_symbol("hamiltonian", V=x**2 / 2)
    assert expectation_weyl(F0, H) == pytest.approx(0.5, abs=1e-10)


def test_probabilities(grid):
    psi0, psi1 = oscillator_eigenstate(grid, 0), oscillator_eigenstate(grid, 1)
    F0 = wigner_transform(psi0)
    G0 = weyl_symbol("projector", state=psi0)
    G1 = weyl_symbol("projector", state=psi1)
    assert probability_weyl(F0, G0).raw == pytest.approx(1, abs=1e-8)
    assert abs(probability_weyl(F0, G1).raw) < 1e-8
    F = wigner_transform(coherent_state(grid, x0=0.5, p0=-0.3))
    dens = np.abs(coherent_state(grid, x0=0.5, p0=-0.3).samples) ** 2
    for xp in (-1.0, 0.5, 2.3):
        D = position_delta(grid, F.pgrid, xp)
        i = grid.axes[0].index_of(xp)
        assert abs(probability_weyl(F, D).value - dens[i]) < 1e-8


@pytest.mark.parametrize("n", [0, 1, 3])
def test_star_delta_mean(grid, n):
    G = weyl_symbol("projector", state=oscillator_eigenstate(grid, n))
    H = weyl_symbol("hamiltonian", V=x**2 / 2).on_grid(G.xgrid, G.pgrid)
    ratio = np.sum(H * G.samples) / np.sum(G.samples)
    assert ratio == pytest.approx(n + 0.5, abs=1e-6)
