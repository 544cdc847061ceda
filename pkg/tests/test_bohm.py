import numpy as np
import pytest

from psbohm import gaussian_oracle as go
from psbohm.bohm import (KERNEL_EPS_NODE, bohm_kernel, bohm_map_poly, bohm_measure, bohm_stargenfunction,
                         bohm_unmap_poly, characteristic_function, expectation_bohm, local_expectation,
                         momentum_probability, momentum_stargenfunction, position_probability,
                         probability_bohm, state_moments)
from psbohm.cohen import f_star
from psbohm.errors import MaskError, ScopeError
from psbohm.madelung import decompose, quantum_potential_mean
from psbohm.moyal import stargenfunction_projector
from psbohm.operators import expectation, hamiltonian, kinetic, l_squared, momentum
from psbohm.states import (coherent_state, gaussian_component, oscillator_eigenstate, superposition_amplitude,
                           superposition_state, vortex_state)
from psbohm.transforms import PhaseSpaceFunction, SpatialGrid, quadrature
from psbohm.wigner import (PolySymbol, characteristic_function_grid, expectation_weyl, marginals, p,
                           position_delta, probability_weyl, wigner_transform, x)

PAIR = [(1.0, -1.5, 0.4, 1.0), (0.7j, 2.0, -0.3, 0.8)]
C = go.CoherentStateParams(x0=0.5, p0=0.7)


@pytest.fixture(scope="module")
def grid():
    return SpatialGrid.uniform(-32.0, 32.0, 512)


@pytest.fixture(scope="module")
def coherent(grid):
    psi = coherent_state(grid, x0=C.x0, p0=C.p0)
    return psi, bohm_kernel(psi), bohm_measure(decompose(psi, eps_node=KERNEL_EPS_NODE))


@pytest.fixture(scope="module")
def pair(grid):
    psi = superposition_state(grid, PAIR)
    return psi, bohm_kernel(psi), bohm_measure(decompose(psi, eps_node=KERNEL_EPS_NODE))


@pytest.fixture(params=["coherent", "pair"])
def state(request):
    return request.getfixturevalue(request.param)


def test_coherent_kernel(coherent):
    _, k, _ = coherent
    ok = ~k.mask
    f0 = go.oracle_kernel(C, k.xi[:, None], k.eta[None, :])
    assert np.max(np.abs(k.samples - f0)[ok] / np.abs(f0[ok])) < 1e-6
    # roundoff floor u sqrt(n) / |D| at the mask edge, see the acceptance suite
    assert k.info["xi_variation"] < 1e-7
    assert k.masked_fraction > 0.5


def test_kernel_is_one_on_eta_axis(state):
    _, k, _ = state
    assert np.all(k.samples[:, k.origin[1]] == 1.0)
    assert np.all(k.inverse_samples[:, k.origin[1]] == 1.0)


def test_pair_kernel_against_brute_force(grid, pair):
    _, k, _ = pair
    nrm = np.sqrt(quadrature(np.abs(superposition_amplitude(grid.points(), PAIR)) ** 2, grid))
    u = np.linspace(-30.0, 30.0, 60001)
    du = u[1] - u[0]

    def amp(y):
        return superposition_amplitude(y, PAIR) / nrm

    a = amp(u)
    da = sum(c * gaussian_component(u, x0, p0, d) * (-(u - x0) / (2 * d**2) + 1j * p0)
             for c, x0, p0, d in PAIR) / nrm
    gradS = np.imag(np.conj(a) * da) / np.abs(a) ** 2
    # the eta = 0 column is fixed to 1 by definition, even where D is roundoff
    valid = ~k.mask
    valid[:, k.origin[1]] = False
    idx = np.argwhere(valid)
    rng = np.random.default_rng(7)
    for i, j in idx[rng.choice(len(idx), 16, replace=False)]:
        xi, eta = k.xi[i], k.eta[j]
        N = np.sum(np.abs(a) ** 2 * np.exp(1j * (eta * gradS + xi * u))) * du
        D = np.sum(np.conj(amp(u - eta / 2)) * amp(u + eta / 2) * np.exp(1j * xi * u)) * du
        assert abs(k.samples[i, j] - N / D) < 1e-6 * abs(N / D)


def test_recovery_identity(state):
    psi, k, m = state
    chi_w = characteristic_function_grid(wigner_transform(psi, k.pgrid))
    idx = np.argwhere(~k.mask)
    sel = idx[np.random.default_rng(3).choice(len(idx), 64, replace=False)]
    chi_b = characteristic_function(m, k.xi[sel[:, 0]], k.eta[sel[:, 1]])
    assert np.max(np.abs(chi_b - k.samples[sel[:, 0], sel[:, 1]] * chi_w[sel[:, 0], sel[:, 1]])) < 1e-6


def test_measure(state):
    psi, _, m = state
    assert m.total_weight == pytest.approx(1.0, abs=1e-8)
    assert np.all(m.weights >= 0)
    assert np.max(np.abs(position_probability(m) - np.abs(psi.samples) ** 2)) < 1e-8


def test_coherent_measure_momenta(coherent):
    _, _, m = coherent
    bulk = m.weights > 1e-12
    assert np.max(np.abs(m.momenta[bulk, 0] - C.p0)) < 1e-8


def test_kinetic_symbol():
    g = SpatialGrid.uniform(-20.0, 20.0, 256)
    T = PolySymbol(p**2 / 2)
    for x0, p0 in [(0.0, 0.0), (0.5, 0.7)]:
        mom = state_moments(coherent_state(g, x0=x0, p0=p0))
        TB = bohm_map_poly(T, mom)
        diff = (TB.expr - T.expr).expand()
        assert diff.free_symbols == set()
        assert float(diff) == pytest.approx(0.125, abs=1e-8)
        assert (bohm_unmap_poly(TB, mom).expr - T.expr).expand() == 0


def test_kinetic_shift_is_mean_quantum_potential(grid):
    psi = superposition_state(grid, PAIR)
    TB = bohm_map_poly(PolySymbol(p**2 / 2), state_moments(psi))
    shift = float((TB.expr - p**2 / 2).expand())
    assert shift == pytest.approx(quantum_potential_mean(decompose(psi)), abs=1e-10)


def test_energy_route(state, grid):
    psi, k, m = state
    H = PolySymbol(p**2 / 2 + x**2 / 2)
    HB = bohm_map_poly(H, k.info["moments"])
    direct = expectation(psi, hamiltonian(grid.points() ** 2 / 2)).real
    assert expectation_bohm(m, HB) == pytest.approx(direct, abs=1e-6)


def test_map_unmap_round_trip(pair):
    mom = pair[1].info["moments"]
    for A in [x * p**2, x**2 * p**2 + p, p**2 * x + x**3]:
        S = PolySymbol(A)
        assert (bohm_unmap_poly(bohm_map_poly(S, mom), mom).expr - S.expr).expand() == 0


def test_map_scope(pair):
    mom = pair[1].info["moments"]
    with pytest.raises(ScopeError):
        bohm_map_poly(PolySymbol(p**3, max_p_degree=4), mom)
    with pytest.raises(ScopeError):
        bohm_map_poly(PolySymbol(x**3 * p**2), mom)


def test_local_expectation_of_momentum(pair, grid):
    psi = pair[0]
    fields = decompose(psi, eps_node=KERNEL_EPS_NODE)
    loc = local_expectation(psi, momentum(), fields)
    ok = ~fields.node_mask
    bulk = ok & (fields.density > 1e-10)
    assert np.max(np.abs(loc - fields.gradS[0])[bulk]) < 1e-8
    assert expectation_bohm(pair[2], loc) == pytest.approx(expectation(psi, momentum()).real, abs=1e-10)


def test_local_expectation_of_kinetic(pair):
    psi, _, m = pair
    fields = decompose(psi, eps_node=KERNEL_EPS_NODE)
    loc = local_expectation(psi, kinetic(), fields)
    assert expectation_bohm(m, loc) == pytest.approx(expectation(psi, kinetic()).real, abs=1e-8)


def test_angular_momentum_squared():
    g = SpatialGrid(SpatialGrid.uniform(-8.0, 8.0, 64).axes * 3)
    psi = vortex_state(g)
    fields = decompose(psi, eps_node=1e-12)
    m = bohm_measure(fields)
    route = expectation_bohm(m, local_expectation(psi, l_squared(), fields))
    direct = expectation(psi, l_squared()).real
    assert route == pytest.approx(2.0, abs=1e-4)
    assert route == pytest.approx(direct, abs=1e-6)


def test_momentum_stargenfunction(coherent):
    _, k, _ = coherent
    pts = k.pgrid.points()
    for pp in [-0.4, 0.3, 1.1]:
        th = momentum_stargenfunction(k, pp)
        assert np.max(np.abs(th - go.oracle_momentum_stargen(C, pts, pp))) < 1e-6


def test_momentum_stargenvalue_residual(coherent, grid):
    _, k, _ = coherent
    th = momentum_stargenfunction(k, 0.3)
    TH = PhaseSpaceFunction(grid, k.pgrid, np.broadcast_to(th, (grid.shape[0], th.size)).astype(complex))
    R = f_star(PolySymbol(p), TH, k).samples - 0.3 * TH.samples
    assert np.sqrt(np.sum(np.abs(R) ** 2) / np.sum(np.abs(TH.samples) ** 2)) < 1e-6


def test_momentum_probability(coherent):
    psi, k, m = coherent
    mp = momentum_probability(m, k)
    assert np.max(np.abs(mp.P1 - go.oracle_momentum_probability(C, mp.p))) < 1e-6
    assert np.max(np.abs(mp.P1 - marginals(wigner_transform(psi, k.pgrid))[1])) < 1e-6
    # the Bohm marginal itself is a delta at p0
    assert mp.P2.sum() == pytest.approx(1.0, abs=1e-8)
    assert mp.P2.max() == pytest.approx(1.0, abs=1e-8)


def test_momentum_stargenfunction_needs_xi_independence(pair):
    with pytest.raises(ScopeError):
        momentum_stargenfunction(pair[1], 0.0)


@pytest.mark.parametrize("n", [0, 1])
def test_projector_probability_kernel_independence(state, grid, n):
    psi, k, m = state
    G = stargenfunction_projector([hamiltonian(grid.points() ** 2 / 2)], oscillator_eigenstate(grid, n),
                                  [n + 0.5], pgrid=k.pgrid)
    pb = probability_bohm(m, bohm_stargenfunction(G.symbol, k))
    pw = probability_weyl(wigner_transform(psi, k.pgrid), G.symbol)
    assert pb.value == pytest.approx(pw.value, abs=1e-6)


def test_projector_in_inverse_mask(coherent, grid):
    _, k, _ = coherent
    G = stargenfunction_projector([hamiltonian(grid.points() ** 2 / 2)], oscillator_eigenstate(grid, 2),
                                  [2.5], pgrid=k.pgrid)
    with pytest.raises(MaskError):
        bohm_stargenfunction(G.symbol, k)


def test_position_delta_probability(state, grid):
    psi, k, m = state
    F = wigner_transform(psi, k.pgrid)
    for xp in [-1.0, 0.5]:
        G = position_delta(grid, k.pgrid, xp)
        pw = probability_weyl(F, G).value
        i = grid.axes[0].index_of(xp)
        assert position_probability(m)[i] == pytest.approx(pw, abs=1e-8)


@pytest.mark.parametrize("A", [x, p, x**2, x * p, p**2, p**2 / 2 + x**2 / 2])
def test_poly_kernel_independence(state, A):
    psi, k, m = state
    S = PolySymbol(A)
    weyl = expectation_weyl(wigner_transform(psi, k.pgrid), S)
    assert expectation_bohm(m, bohm_map_poly(S, k.info["moments"])) == pytest.approx(weyl, abs=1e-6)


def test_kernel_rejects_3d():
    g = SpatialGrid(SpatialGrid.uniform(-8.0, 8.0, 16).axes * 3)
    with pytest.raises(ScopeError):
        bohm_kernel(vortex_state(g))


def test_excited_state_kernel_reports_masks(grid):
    k = bohm_kernel(oscillator_eigenstate(grid, 1))
    assert 0 < k.masked_fraction < 1
    assert np.all(np.isfinite(k.samples))
    assert np.all(np.isfinite(k.log_gradient))
