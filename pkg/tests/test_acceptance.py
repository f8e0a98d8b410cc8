"""Acceptance suite: one test per headline criterion, at the stated
tolerances.  Everything here is cross-checked against an independent
oracle (analytic value, second algorithm, or exact arithmetic), not
against recorded outputs of the code under test.
"""

from fractions import Fraction

import numpy as np
import pytest

from nls2d.functionals import (
    GaussianProfile,
    ModelParams,
    gn_quotient,
    interaction_error,
    scaled_potential,
    stability_quotient,
)
from nls2d.grids import Field2D, Grid2D, integrate, normalize
from nls2d.minimize import critical_constant, minimize_energy, shoot_townes

from conftest import random_smooth_field


# 1. critical constant: two independent routes agree -------------------------


def test_critical_constant_cross_check():
    a_shoot = critical_constant(method="shooting")
    a_grid = critical_constant(method="grid-minimization")
    assert abs(a_shoot - a_grid) / a_shoot < 1e-3
    # the shot radial profile, interpolated onto the 2D grid, minimizes the
    # quotient it came from
    profile = shoot_townes()
    u = profile.to_field(Grid2D(8.0, 128))
    assert abs(gn_quotient(u) - a_shoot) / a_shoot < 5e-3


# 2. exact thresholds ---------------------------------------------------------


def test_exact_thresholds():
    from nls2d.exponents import run_schedule, step_bound, thresholds

    assert thresholds(2) == (Fraction(1, 6), Fraction(3, 4))
    for s in (1, 2, 3):
        _, b1 = thresholds(s)
        c_max, admissible = step_bound(s, b1)
        assert c_max == 0
        assert not admissible
    for s in np.linspace(0.2, 8.0, 10):
        _, b1 = thresholds(float(s))
        for beta in np.linspace(0.05, 0.95, 10):
            verdict = run_schedule(float(s), float(beta)).verdict
            assert (verdict == "converged") == (beta < float(b1))


# 3. oscillator ladder --------------------------------------------------------


def test_oscillator_ladder(grid64):
    from nls2d.manybody import count_modes_below, one_body_modes

    params = ModelParams(s=2.0)
    basis = one_body_modes(params, grid64, 6)
    assert np.allclose(basis.eigenvalues, [2, 4, 4, 6, 6, 6], atol=1e-4)

    res = minimize_energy("nls", params, grid64)
    assert res.report.total == pytest.approx(basis.eigenvalues[0], abs=1e-6)

    count_grid = Grid2D(10.0, 64)
    Ls = np.array([10.0, 20.0, 30.0, 40.0, 50.0, 60.0])
    counts = np.array([count_modes_below(params, L, grid=count_grid)
                       for L in Ls])
    slope = np.polyfit(np.log(Ls), np.log(counts), 1)[0]
    assert abs(slope - 2.0) / 2.0 < 0.15


# 4. scaled-interaction sweep -------------------------------------------------


def test_interaction_error_sweep():
    grid = Grid2D(4.0, 1024)
    u = Field2D(grid, np.exp(-grid.rsq / 2.0) / np.sqrt(np.pi))
    w = GaussianProfile(integral=2.0, sigma=1.0)
    lams = [1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0]
    errs = [interaction_error(u, w, lam) for lam in lams]
    assert all(a > b for a, b in zip(errs, errs[1:]))
    raw = interaction_error(u, w, 1.0, normalized=False)
    assert raw == pytest.approx(w.integral / (6.0 * np.pi), abs=1e-5)
    assert errs[6] / errs[1] < 0.1  # lambda = 64 vs lambda = 2


# 5. variational chain at desk scale -----------------------------------------


def test_variational_chain(grid64):
    from nls2d.manybody import (
        assemble_hamiltonian,
        ground_state,
        hartree_energy_in_span,
        one_body_modes,
        two_body_tensor,
    )

    basis = one_body_modes(ModelParams(s=2.0), grid64, 6)
    w = GaussianProfile(integral=1.0, sigma=1.0)
    gaps = []
    for N in (2, 3, 4, 5):
        wn = scaled_potential(w, N, 0.3, grid64)
        tensor = two_body_tensor(basis, wn)
        e, _ = ground_state(assemble_hamiltonian(basis, tensor, N), N)
        e_span, _ = hartree_energy_in_span(basis, tensor, N)
        assert e <= e_span + 1e-8
        gaps.append(e_span - e)
    assert all(b <= a + 1e-10 for a, b in zip(gaps, gaps[1:]))


# 6. focusing stability at desk scale -----------------------------------------


def test_focusing_stability(grid64):
    from nls2d.manybody import (
        assemble_hamiltonian,
        ground_state,
        moments,
        one_body_modes,
        two_body_tensor,
    )

    w = GaussianProfile(integral=-2.0, sigma=1.0)
    quotient = stability_quotient(w, grid64, polish_steps=100)
    assert quotient.value > -1.0 + 0.1  # strictly stable regime

    basis = one_body_modes(ModelParams(s=2.0), grid64, 6)
    energies, m1s, m2s = [], [], []
    for N in (2, 3, 4, 5):
        wn = scaled_potential(w, N, 0.6, grid64)
        tensor = two_body_tensor(basis, wn)
        e, psi = ground_state(assemble_hamiltonian(basis, tensor, N), N)
        m1, m2 = moments(psi, basis)
        energies.append(e)
        m1s.append(m1)
        m2s.append(m2)
    # uniform lower bound and a narrow regression band across N
    assert min(energies) > 0.0
    assert max(energies) - min(energies) < 0.05
    assert max(m1s) < 2.5
    assert max(m2s) < 5.0


# 7. de Finetti bound ----------------------------------------------------------


def _random_symmetric_state(d, N, seed):
    from math import comb

    from nls2d.manybody import SymmetricState

    rng = np.random.default_rng(seed)
    dim = comb(d + N - 1, N)
    amps = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return SymmetricState(d, N, amps).normalized()


@pytest.mark.parametrize("d,N", [(2, 8), (2, 16), (3, 12)])
def test_definetti_bound_50_states(d, N):
    from nls2d.definetti import definetti_error, lower_symbol_measure

    bound = 8.0 * d / N
    for seed in range(50):
        psi = _random_symmetric_state(d, N, 1000 + seed)
        mu = lower_symbol_measure(psi)
        res = definetti_error(psi, mu, samples=200_000, seed=seed)
        assert res.stderr < 0.1 * bound
        assert not res.inconclusive
        assert res.value <= bound


def test_definetti_error_decreases_in_n():
    from nls2d.definetti import definetti_error, lower_symbol_measure

    means = {}
    for N in (4, 16):
        vals = []
        for seed in range(20):
            psi = _random_symmetric_state(2, N, 2000 + seed)
            vals.append(definetti_error(psi, lower_symbol_measure(psi)).value)
        means[N] = float(np.mean(vals))
    assert means[16] < means[4]


# 8. gradient and invariant suites ---------------------------------------------


def test_gradient_and_invariants(grid64, astar):
    from nls2d.functionals import nls_energy, nls_gradient
    from nls2d.manybody import partial_trace_last, reduced_density

    # finite differences with fresh (unseeded) randomness each run
    rng = np.random.default_rng()
    params = ModelParams(s=2.0, coupling=-1.0)
    for _ in range(3):
        u = normalize(random_smooth_field(grid64, rng))
        h = normalize(random_smooth_field(grid64, rng))
        grad = nls_gradient(u, params)
        eps = 1e-6
        plus = nls_energy(u.with_values(u.values + eps * h.values), params,
                          raw=True).total
        minus = nls_energy(u.with_values(u.values - eps * h.values), params,
                           raw=True).total
        fd = (plus - minus) / (2.0 * eps)
        pairing = float(np.real(integrate(np.conj(grad.values) * h.values,
                                          grid64)))
        assert fd == pytest.approx(pairing, rel=1e-6)

    # mass conservation along a minimization
    res = minimize_energy("nls", params, grid64)
    assert abs(res.field.mass - 1.0) < 1e-12

    # density-matrix consistency
    psi = _random_symmetric_state(4, 3, seed=99)
    g1 = reduced_density(psi, 1)
    g2 = reduced_density(psi, 2)
    for g in (g1, g2):
        assert abs(g.trace - 1.0) < 1e-10
        assert g.eigenvalues().min() > -1e-10
    assert np.max(np.abs(partial_trace_last(g2, 4) - g1.matrix)) < 1e-10

    # GN inequality against the computed critical constant
    rng = np.random.default_rng(17)
    for _ in range(200):
        u = random_smooth_field(grid64, rng)
        assert gn_quotient(u) >= astar * (1.0 - 1e-3)
