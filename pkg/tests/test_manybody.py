import numpy as np
import pytest

from nls2d.functionals import GaussianProfile, ModelParams, scaled_potential
from nls2d.grids import Grid2D, integrate
from nls2d.manybody import (
    DimensionCapError,
    ModeBasis,
    SymmetricState,
    assemble_hamiltonian,
    count_modes_below,
    gse2_error_terms,
    ground_state,
    hartree_energy_in_span,
    moments,
    occupation_basis,
    one_body_modes,
    operator_constant,
    partial_trace_last,
    perturbed_ground_energy,
    reduced_density,
    two_body_tensor,
)


@pytest.fixture(scope="module")
def oscillator_basis(grid64):
    return one_body_modes(ModelParams(s=2.0), grid64, 6)


def random_state(M, N, seed):
    rng = np.random.default_rng(seed)
    from math import comb

    dim = comb(M + N - 1, N)
    amps = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return SymmetricState(M, N, amps).normalized()


# -- one-body modes ----------------------------------------------------------


def test_oscillator_ladder(oscillator_basis):
    assert np.allclose(oscillator_basis.eigenvalues,
                       [2.0, 4.0, 4.0, 6.0, 6.0, 6.0], atol=1e-4)


def test_modes_orthonormal(oscillator_basis):
    gram = oscillator_basis.gram()
    assert np.max(np.abs(gram - np.eye(6))) < 1e-8


def test_ground_mode_positive_radial(oscillator_basis, grid64):
    phi0 = oscillator_basis.modes[0]
    assert np.all(np.real(phi0) > -1e-10)
    # radial: symmetric under x <-> y and x -> -x (index -i mod n)
    assert np.max(np.abs(phi0 - phi0.T)) < 1e-6
    flipped = np.roll(phi0[::-1, :], 1, axis=0)
    assert np.max(np.abs(phi0 - flipped)) < 1e-6


def test_count_modes_below_oscillator():
    params = ModelParams(s=2.0)
    assert count_modes_below(params, 6.0 + 1e-6) == 6
    assert count_modes_below(params, 1.0) == 0
    counts = [count_modes_below(params, L) for L in (4.0, 8.0, 12.0)]
    assert counts == sorted(counts)


# -- occupation machinery ------------------------------------------------------


def test_occupation_basis_dimension():
    from math import comb

    occ = occupation_basis(4, 3)
    assert occ.shape == (comb(4 + 3 - 1, 3), 4)
    assert np.all(occ.sum(axis=1) == 3)
    assert len({tuple(row) for row in occ}) == occ.shape[0]


def test_two_body_tensor_properties(oscillator_basis, grid64):
    w = GaussianProfile(integral=1.0, sigma=0.5)
    W = two_body_tensor(oscillator_basis, w.sample(grid64)).tensor
    # symmetry under (i,k) <-> (j,l) relabeling and Hermitian pair form
    assert np.max(np.abs(W - W.transpose(1, 0, 3, 2))) < 1e-12
    assert np.max(np.abs(W - np.conj(W.transpose(2, 3, 0, 1)))) < 1e-12
    assert np.max(np.abs(W.imag)) < 1e-12  # real modes, real w


def test_two_body_tensor_delta_limit(grid128):
    # narrow unit-mass w: W0000 -> int |phi_0|^4 = 1/(2 pi) for the
    # oscillator ground mode
    basis = one_body_modes(ModelParams(s=2.0), grid128, 1)
    w = GaussianProfile(integral=1.0, sigma=0.1)
    W = two_body_tensor(basis, w.sample(grid128)).tensor
    assert W[0, 0, 0, 0].real == pytest.approx(1.0 / (2.0 * np.pi), rel=2e-2)


def test_two_body_tensor_zero_w(oscillator_basis, grid64):
    W = two_body_tensor(oscillator_basis, np.zeros(grid64.shape())).tensor
    assert np.max(np.abs(W)) == 0.0


# -- Hamiltonian and ground state ---------------------------------------------


def test_single_mode_two_particles(grid64):
    basis = one_body_modes(ModelParams(s=2.0), grid64, 1)
    w = GaussianProfile(integral=1.0, sigma=0.5)
    tensor = two_body_tensor(basis, w.sample(grid64))
    H = assemble_hamiltonian(basis, tensor, 2)
    assert H.shape == (1, 1)
    expected = 2.0 * basis.eigenvalues[0] + tensor.tensor[0, 0, 0, 0].real
    assert H.toarray()[0, 0] == pytest.approx(expected, rel=1e-12)


@pytest.mark.parametrize("N", [2, 3, 4])
def test_noninteracting_ground_energy(oscillator_basis, grid64, N):
    tensor = two_body_tensor(oscillator_basis, np.zeros(grid64.shape()))
    H = assemble_hamiltonian(oscillator_basis, tensor, N)
    diag = H.diagonal()
    occ = occupation_basis(6, N)
    assert np.allclose(diag, occ @ oscillator_basis.eigenvalues, atol=1e-12)
    e, psi = ground_state(H, N)
    assert e == pytest.approx(oscillator_basis.eigenvalues[0], abs=1e-6)
    m1, m2 = moments(psi, oscillator_basis)
    assert m1 == pytest.approx(oscillator_basis.eigenvalues[0], abs=1e-8)
    assert m2 == pytest.approx(oscillator_basis.eigenvalues[0] ** 2, abs=1e-7)


def test_hamiltonian_hermitian(oscillator_basis, grid64):
    w = GaussianProfile(integral=0.7, sigma=0.8)
    tensor = two_body_tensor(oscillator_basis, w.sample(grid64))
    H = assemble_hamiltonian(oscillator_basis, tensor, 3)
    assert abs(H - H.getH()).max() == 0.0


def test_ground_energy_monotone_in_coupling(oscillator_basis, grid64):
    w = GaussianProfile(integral=1.0, sigma=0.8)
    w_grid = w.sample(grid64)
    energies = []
    for gfac in (0.0, 0.5, 1.0):
        tensor = two_body_tensor(oscillator_basis, gfac * w_grid)
        H = assemble_hamiltonian(oscillator_basis, tensor, 3)
        energies.append(ground_state(H, 3)[0])
    assert energies[0] <= energies[1] <= energies[2]
    assert energies[2] > energies[0]


def test_perturbed_ground_energy(oscillator_basis, grid64):
    w = GaussianProfile(integral=0.5, sigma=0.8)
    tensor = two_body_tensor(oscillator_basis, w.sample(grid64))
    e0 = perturbed_ground_energy(oscillator_basis, tensor, 3, 0.0)
    assert e0 == pytest.approx(
        ground_state(assemble_hamiltonian(oscillator_basis, tensor, 3), 3)[0],
        rel=1e-12)
    vals = [perturbed_ground_energy(oscillator_basis, tensor, 3, eps)
            for eps in (0.0, 0.1, 0.2)]
    assert vals[0] >= vals[1] >= vals[2]
    # w = 0: e_{N,eps} = (1-eps) eps_0
    zero = two_body_tensor(oscillator_basis, np.zeros(grid64.shape()))
    assert perturbed_ground_energy(oscillator_basis, zero, 3, 0.25) == \
        pytest.approx(0.75 * oscillator_basis.eigenvalues[0], abs=1e-6)


def test_dimension_cap():
    with pytest.raises(DimensionCapError):
        occupation_basis(40, 6)


# -- reduced density matrices --------------------------------------------------


def test_product_state_density():
    psi = SymmetricState.product(4, 5)
    g1 = reduced_density(psi, 1)
    expected = np.zeros((4, 4))
    expected[0, 0] = 1.0
    assert np.max(np.abs(g1.matrix - expected)) < 1e-12


def test_two_mode_cat_state():
    # N = 2, M = 2, (|2,0> + |0,2>)/sqrt(2): gamma^(1) eigenvalues (1/2, 1/2)
    from nls2d.manybody import _occupation_index

    amps = np.zeros(3, dtype=complex)
    amps[_occupation_index(2, 2)[(2, 0)]] = 1.0 / np.sqrt(2.0)
    amps[_occupation_index(2, 2)[(0, 2)]] = 1.0 / np.sqrt(2.0)
    psi = SymmetricState(2, 2, amps)
    evals = reduced_density(psi, 1).eigenvalues()
    assert np.allclose(evals, [0.5, 0.5], atol=1e-12)


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_density_matrix_postconditions(seed):
    psi = random_state(4, 3, seed)
    g1 = reduced_density(psi, 1)
    g2 = reduced_density(psi, 2)
    for g in (g1, g2):
        assert np.max(np.abs(g.matrix - g.matrix.conj().T)) < 1e-12
        assert g.trace == pytest.approx(1.0, abs=1e-10)
        assert g.eigenvalues().min() > -1e-10
    traced = partial_trace_last(g2, 4)
    assert np.max(np.abs(traced - g1.matrix)) < 1e-10


def test_reduced_density_rejects_large_k():
    psi = SymmetricState.product(3, 1)
    with pytest.raises(ValueError):
        reduced_density(psi, 2)


def test_energy_identity_via_gamma2(oscillator_basis, grid64):
    # e_N = Tr(K2 gamma^(2)) with K2 = (h_x + h_y + w(x-y)) / 2 on the span
    w = GaussianProfile(integral=0.8, sigma=0.7)
    tensor = two_body_tensor(oscillator_basis, w.sample(grid64))
    N = 4
    H = assemble_hamiltonian(oscillator_basis, tensor, N)
    e, psi = ground_state(H, N)
    g2 = reduced_density(psi, 2).matrix
    eps = oscillator_basis.eigenvalues
    M = 6
    hx = np.kron(np.diag(eps), np.eye(M))
    hy = np.kron(np.eye(M), np.diag(eps))
    K2 = 0.5 * (hx + hy + tensor.pair_matrix())
    assert float(np.real(np.trace(K2 @ g2))) == pytest.approx(e, abs=1e-8)


# -- moments and diagnostics ---------------------------------------------------


def test_moments_product_state(oscillator_basis):
    psi = SymmetricState.product(6, 4)
    m1, m2 = moments(psi, oscillator_basis)
    eps0 = oscillator_basis.eigenvalues[0]
    assert m1 == pytest.approx(eps0, rel=1e-10)
    assert m2 == pytest.approx(eps0**2, rel=1e-10)


def test_moments_bounds(oscillator_basis):
    for seed in range(3):
        psi = random_state(6, 3, 10 + seed)
        m1, m2 = moments(psi, oscillator_basis)
        assert m2 >= 0.0
        assert m1 >= oscillator_basis.eigenvalues[0] - 1e-10


def test_gse2_terms_noninteracting(oscillator_basis, grid64):
    tensor = two_body_tensor(oscillator_basis, np.zeros(grid64.shape()))
    H = assemble_hamiltonian(oscillator_basis, tensor, 4)
    _, psi = ground_state(H, 4)
    out = gse2_error_terms(psi, oscillator_basis, L=10.0, delta=0.1, N=4)
    # moments are (2, 4) analytically: term = 10^{-0.2} 2^{0.2} 4^{0.6}
    expected = 10.0 ** (-0.2) * 2.0**0.2 * 4.0**0.6
    assert out["term_moment"] == pytest.approx(expected, rel=1e-3)
    assert out["term_dim"] > 0.0
    # 1/N decay at fixed L
    out8 = gse2_error_terms(psi, oscillator_basis, L=10.0, delta=0.1, N=8)
    assert out8["term_dim"] == pytest.approx(out["term_dim"] / 2.0, rel=1e-12)


def test_operator_constant_forms(oscillator_basis, grid64):
    w = GaussianProfile(integral=1.0, sigma=0.8)
    w_grid = w.sample(grid64)
    zero = operator_constant(oscillator_basis, np.zeros(grid64.shape()),
                             form="W<=h_x")
    assert zero == 0.0
    c1 = operator_constant(oscillator_basis, w_grid, form="W<=h_x")
    c1_scaled = operator_constant(oscillator_basis, 2.0 * w_grid, form="W<=h_x")
    assert c1 > 0.0
    assert c1_scaled == pytest.approx(c1, abs=1e-10)
    with pytest.raises(ValueError):
        operator_constant(oscillator_basis, w_grid, form="W<=(hh)^s",
                          delta=0.7)


def test_operator_constant_stable_across_basis_size(grid64):
    w = GaussianProfile(integral=1.0, sigma=0.8)
    w_grid = w.sample(grid64)
    consts = []
    for M in (8, 16, 32):
        basis = one_body_modes(ModelParams(s=2.0), grid64, M)
        consts.append(operator_constant(basis, w_grid, form="W<=h_x"))
    spread = (max(consts) - min(consts)) / max(consts)
    assert spread < 0.25


# -- Hartree energy on the span -------------------------------------------------


def test_hartree_span_upper_bounds_ground_energy(oscillator_basis, grid64):
    w = GaussianProfile(integral=1.0, sigma=0.8)
    tensor = two_body_tensor(oscillator_basis, w.sample(grid64))
    for N in (2, 3, 4):
        H = assemble_hamiltonian(oscillator_basis, tensor, N)
        e, _ = ground_state(H, N)
        e_span, c = hartree_energy_in_span(oscillator_basis, tensor, N)
        assert e <= e_span + 1e-8
        assert np.linalg.norm(c) == pytest.approx(1.0, abs=1e-8)
