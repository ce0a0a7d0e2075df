import numpy as np
import pytest

from avfield.fields import ComplexField, Grid2D, RealField, normalize
from avfield.manybody import (
    assemble_H2,
    check_symmetric_terms,
    ground_energy_2body,
    mixed_term_dual_route,
    pair_expectation,
    product_pair_coefficients,
    product_state_energy,
    random_symmetric_trials,
    three_body_form_value,
    three_body_positivity_check,
)
from avfield.meanfield import ModelParams, SolverConfig, energy_af, minimize_af
from avfield.potentials import GaugeSpec, TrapSpec, induced_gauge_field
from avfield.spectral import build_spectrum
from conftest import sampled_gaussian, smooth_state


def params_with(beta, R=0.1, b0=0.0):
    return ModelParams(beta=beta, R=R, trap=TrapSpec(exponent=2.0), gauge=GaugeSpec(b0=b0))


@pytest.fixture(scope="module")
def basis12():
    return build_spectrum(params_with(0.0), Grid2D(16.0, 64), m=12)


class TestProductStateEnergy:
    def test_beta_zero_reduces_to_one_body(self, grid64):
        u = smooth_state(grid64, 1)
        pe = product_state_energy(u, 7, params_with(0.0))
        assert pe.total_per_particle == pytest.approx(pe.kinetic, rel=1e-14)

    def test_real_state_has_no_mixed_term(self, grid64):
        u = sampled_gaussian(grid64)
        pe = product_state_energy(u, 3, params_with(1.0))
        assert abs(pe.mixed) < 1e-10

    @pytest.mark.parametrize("N", [2, 5, 50, 500])
    def test_mean_field_consistency_identity(self, grid64, N):
        # total/particle - functional value = beta^2/(N-1) (self_pair - three_body)
        u = smooth_state(grid64, 2)
        params = params_with(1.3)
        pe = product_state_energy(u, N, params)
        lhs = pe.total_per_particle - energy_af(u, params)
        rhs = params.beta**2 / (N - 1) * (pe.self_pair - pe.three_body)
        assert abs(lhs - rhs) < 1e-12

    def test_two_particles_drop_three_body_weight(self, grid64):
        u = smooth_state(grid64, 3)
        pe = product_state_energy(u, 2, params_with(1.0))
        expected = pe.kinetic + pe.mixed + pe.self_pair
        assert pe.total_per_particle == pytest.approx(expected, rel=1e-14)

    def test_nonnegative_quadratic_terms(self, grid64):
        u = smooth_state(grid64, 4)
        pe = product_state_energy(u, 5, params_with(0.7))
        assert pe.three_body >= 0.0
        assert pe.self_pair >= 0.0

    def test_bare_kernel_rejected(self, grid64):
        u = smooth_state(grid64, 5)
        with pytest.raises(ValueError, match="diverges"):
            product_state_energy(u, 2, params_with(1.0, R=0.0))


class TestMixedTermDualRoute:
    @pytest.mark.parametrize("seed", [10, 11, 12])
    def test_routes_agree(self, grid64, seed):
        u = smooth_state(grid64, seed)
        a, b = mixed_term_dual_route(u, params_with(1.0))
        assert b == pytest.approx(a, rel=1e-6)

    def test_real_state_both_routes_vanish(self, grid64):
        u = sampled_gaussian(grid64)
        a, b = mixed_term_dual_route(u, params_with(1.0))
        assert abs(a) < 1e-10
        assert abs(b) < 1e-10

    def test_uniform_phase_gradient_pairs_to_zero(self, grid64):
        # u = e^{i k.x} * gaussian carries current k*rho, and the pairing
        # int rho (K * rho) vanishes by kernel oddness: both routes ~ 0
        X, Y = grid64.meshes
        gauss = sampled_gaussian(grid64)
        k1 = 2 * np.pi / grid64.L
        u = normalize(ComplexField(grid64, np.exp(1j * k1 * X) * gauss.values))
        a, b = mixed_term_dual_route(u, params_with(1.0))
        assert abs(a) < 1e-10
        assert abs(b) < 1e-10

    def test_current_amplitude_linearity(self, grid64):
        # u = e^{i a theta} * gaussian has current a*rho*grad(theta) with
        # unchanged density, so the mixed term is exactly linear in a
        X, Y = grid64.meshes
        gauss = sampled_gaussian(grid64)
        theta = np.cos(2 * np.pi * X / grid64.L) * np.sin(2 * np.pi * Y / grid64.L)
        vals = []
        for amp in (0.05, 0.1):
            u = normalize(
                ComplexField(grid64, np.exp(1j * amp * theta) * gauss.values)
            )
            a, b = mixed_term_dual_route(u, params_with(1.0))
            assert b == pytest.approx(a, rel=1e-6)
            vals.append(a)
        assert vals[1] / vals[0] == pytest.approx(2.0, rel=1e-10)

    def test_requires_positive_radius(self, grid64):
        u = smooth_state(grid64, 13)
        with pytest.raises(ValueError):
            mixed_term_dual_route(u, params_with(1.0, R=0.0))


class TestTwoBodyMatrix:
    def test_beta_zero_is_diagonal(self, basis12):
        H = assemble_H2(basis12, params_with(0.0))
        lam = basis12.eigenvalues
        for row, (a, b) in enumerate(H.pairs):
            assert H.matrix[row, row] == pytest.approx(lam[a] + lam[b], rel=1e-12)
        off = H.matrix - np.diag(np.diag(H.matrix))
        assert np.abs(off).max() < 1e-12

    def test_hermitian(self, basis12):
        H = assemble_H2(basis12, params_with(1.0))
        assert np.abs(H.matrix - H.matrix.conj().T).max() < 1e-10
        assert H.asymmetry < 1e-6

    def test_self_pair_cross_identity(self, basis12):
        # squared-kernel diagonal on phi_0 (x) phi_0 matches the product-state
        # self-pair integral (up to the 2 beta^2 ordered-pair weight)
        beta = 0.8
        params = params_with(beta)
        H_int = assemble_H2(basis12, params).matrix - assemble_H2(
            basis12, params_with(0.0)
        ).matrix
        phi0 = ComplexField(basis12.grid, basis12.modes[0])
        pe = product_state_energy(normalize(phi0), 2, params)
        row = 0  # pair (0, 0)
        # the mixed term vanishes on the real ground mode, leaving the kernel
        got = H_int[row, row].real
        assert got == pytest.approx(2 * beta**2 * pe.self_pair, rel=1e-8)

    def test_eigenvalues_invariant_under_basis_permutation(self, basis12):
        from avfield.spectral import SpectralBasis

        params = params_with(1.0)
        H = assemble_H2(basis12, params)
        perm = np.array([3, 1, 0, 2, 5, 4, 7, 6, 9, 8, 11, 10])
        permuted = SpectralBasis(
            basis12.grid,
            basis12.eigenvalues[perm],
            basis12.modes[perm],
            basis12.params,
        )
        H2 = assemble_H2(permuted, params)
        w1 = np.linalg.eigvalsh(H.matrix)
        w2 = np.linalg.eigvalsh(H2.matrix)
        assert np.abs(w1 - w2).max() < 1e-10

    def test_restrict_is_leading_subspace(self, basis12):
        H = assemble_H2(basis12, params_with(1.0))
        sub = H.restrict(5)
        assert sub.basis_size == 5
        assert len(sub.pairs) == 15

    def test_mode_budget(self, basis12):
        with pytest.raises(ValueError, match="budget"):
            assemble_H2(basis12, params_with(1.0), m=65)


class TestGroundEnergy:
    def test_beta_zero_gives_lowest_eigenvalue(self, basis12):
        H = assemble_H2(basis12, params_with(0.0))
        assert ground_energy_2body(H) == pytest.approx(
            float(basis12.eigenvalues[0]), rel=1e-12
        )

    def test_rank_one_variational_identity(self, basis12):
        # a single-mode basis pins the pair energy to the product-state value
        params = params_with(1.0)
        H = assemble_H2(basis12, params).restrict(1)
        phi0 = normalize(ComplexField(basis12.grid, basis12.modes[0]))
        pe = product_state_energy(phi0, 2, params)
        assert ground_energy_2body(H) == pytest.approx(
            pe.total_per_particle, rel=1e-8
        )

    def test_monotone_in_basis_size(self, basis12):
        H = assemble_H2(basis12, params_with(1.0))
        energies = [ground_energy_2body(H.restrict(m)) for m in (2, 4, 8, 12)]
        assert all(b <= a + 1e-12 for a, b in zip(energies, energies[1:]))

    def test_below_projected_minimizer(self, basis12):
        params = params_with(0.8)
        res = minimize_af(
            params, SolverConfig(tol=1e-10, max_iter=20_000, seed=7), grid=basis12.grid
        )
        H = assemble_H2(basis12, params)
        coeffs = product_pair_coefficients(basis12, res.u_star, 12)
        assert ground_energy_2body(H) <= pair_expectation(H, coeffs) / 2 + 1e-10


class TestThreeBody:
    def test_single_product_matches_induced_field(self, grid64):
        # <u (x) v (x) v | W3 | same> = int |u|^2 |A[|v|^2]|^2
        u = smooth_state(grid64, 20)
        v = smooth_state(grid64, 21)
        R = 0.1
        got = three_body_form_value([(u, v)], R)
        A = induced_gauge_field(RealField(grid64, np.abs(v.values) ** 2), R)
        want = grid64.h**2 * np.sum(
            np.abs(u.values) ** 2 * (A.x_values**2 + A.y_values**2)
        )
        assert got == pytest.approx(want, rel=1e-8)
        assert got >= 0.0

    def test_radial_v_specialization(self, grid64):
        X, Y = grid64.meshes
        v = normalize(ComplexField(grid64, np.exp(-(X**2 + Y**2) / 2)))
        u = smooth_state(grid64, 22)
        got = three_body_form_value([(u, v)], 0.2)
        A = induced_gauge_field(RealField(grid64, np.abs(v.values) ** 2), 0.2)
        want = grid64.h**2 * np.sum(
            np.abs(u.values) ** 2 * (A.x_values**2 + A.y_values**2)
        )
        assert got == pytest.approx(want, rel=1e-8)

    def test_random_trials_nonnegative(self, grid64):
        trials = random_symmetric_trials(grid64, n_trials=25, seed=99)
        report = three_body_positivity_check(trials, R=0.1)
        assert report.min_value >= -1e-10
        assert np.isfinite(report.fitted_constant)

    def test_rejects_asymmetric_triple(self, grid64):
        u = smooth_state(grid64, 30)
        v = smooth_state(grid64, 31)
        w = smooth_state(grid64, 32)
        with pytest.raises(ValueError, match="not symmetric"):
            check_symmetric_terms([(u, v, w)])
        # symmetric triple accepted
        ok = check_symmetric_terms([(u, v, v)])
        assert len(ok) == 1

    def test_rejects_too_many_terms(self, grid64):
        u = smooth_state(grid64, 33)
        with pytest.raises(ValueError, match="at most 5"):
            check_symmetric_terms([(u, u)] * 6)
