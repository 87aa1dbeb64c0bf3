import math

import numpy as np
import pytest

from rpp.errors import DomainError
from rpp.varcalc import (Lambda0, Lambda1, LatticeOperatorSpec, M_from_sigma, QuadraticFunctional,
                         box_ground_energy, constant_identity_residuals, dirichlet_lambda_d,
                         eigen_scaling_check, m_lattice_1d, neg_laplacian, potential_functional,
                         principal_eigenpair, principal_eigenvalue, printed_constant_comparison,
                         rate_I_D, rho_dp, rho_from_sigma, rho_lattice_1d, richardson,
                         riesz_lattice_potential, sigma_from_rho, sup_L2_on_Gd,
                         threshold_equivalence_check, threshold_equivalence_exact)

RHO_1 = 4.122957139140642  # d=1, p=3/4, radial FEM + Richardson
RHO_3 = 1.2432415958285916  # d=3, p=3/2


class TestLattice:
    def test_laplacian_is_spd_and_symmetric(self):
        L = neg_laplacian((4, 5), 0.25).toarray()
        np.testing.assert_array_equal(L, L.T)
        assert np.linalg.eigvalsh(L).min() > 0

    @pytest.mark.parametrize("n", [8, 33])
    def test_free_box_closed_form(self, n):
        h = 2.0 / n
        spec = LatticeOperatorSpec.box((-1.0,), (1.0,), h)
        lam = principal_eigenvalue(spec)
        assert lam == pytest.approx(-(2 / h**2) * math.sin(math.pi / (2 * n)) ** 2, rel=1e-12)
        assert -lam == pytest.approx(box_ground_energy((-1.0,), (1.0,), h), rel=1e-12)

    def test_methods_agree(self):
        gen = np.random.default_rng(1)
        spec = LatticeOperatorSpec.box((-1.0, -1.0), (1.0, 1.0), 0.125)
        spec = spec.with_xi(gen.uniform(-2, 2, spec.shape))
        ref = principal_eigenvalue(spec, "dense")
        assert principal_eigenvalue(spec, "sparse") == pytest.approx(ref, rel=1e-10)
        assert principal_eigenvalue(spec, "power", tol=1e-13) == pytest.approx(ref, rel=1e-6)
        spec1 = LatticeOperatorSpec.box((0.0,), (3.0,), 0.1).with_xi(np.sin(np.arange(29.0)))
        assert principal_eigenvalue(spec1, "tridiagonal") == pytest.approx(
            principal_eigenvalue(spec1, "dense"), rel=1e-12)

    def test_mask_is_dirichlet(self):
        # masking the right half of [-1, 1] leaves the lattice problem on [-1, 0]
        spec = LatticeOperatorSpec.box((-1.0,), (1.0,), 1 / 16, mask_fn=lambda X: X[..., 0] < -1e-9)
        half = LatticeOperatorSpec.box((-1.0,), (0.0,), 1 / 16)
        assert principal_eigenvalue(spec) == pytest.approx(principal_eigenvalue(half), rel=1e-10)

    def test_eigenvector_sign(self):
        spec = LatticeOperatorSpec.box((0.0,), (1.0,), 1 / 20)
        _, v = principal_eigenpair(spec)
        assert np.all(v > 0) or np.all(v < 0)

    def test_rejects(self):
        with pytest.raises(DomainError):
            LatticeOperatorSpec((0.0,), (1.0,), 0.5, np.zeros(3))
        with pytest.raises(DomainError):
            LatticeOperatorSpec((0.0,), (1.0,), 0.25, np.array([0.0, np.inf, 0.0]))
        with pytest.raises(DomainError):
            principal_eigenvalue(LatticeOperatorSpec.box((0.0,), (1.0,), 0.25), "qr")

    def test_riesz_potential_cell_average_1d(self):
        v = riesz_lattice_potential((-1.0,), (1.0,), 0.5, 0.75)
        # the node at 0 holds the average of |x|^{-3/4} over [-1/4, 1/4]
        assert v[1] == pytest.approx(0.25**0.25 / 0.25 / 0.25 * 2 / 2, rel=1e-12)
        assert v[0] == pytest.approx(((0.75**0.25) - (0.25**0.25)) / 0.25 / 0.5, rel=1e-12)

    def test_scaling_residual_small(self):
        assert eigen_scaling_check(1.0, 1, 0.75, 4.0, 1.0, 1 / 32) == 0.0
        assert eigen_scaling_check(1.0, 1, 0.75, 4.0, 2.0, 1 / 32) < 1e-2


class TestBallAndBox:
    def test_dirichlet_ball(self):
        assert dirichlet_lambda_d(1) == pytest.approx(math.pi**2 / 8, rel=1e-14)
        assert dirichlet_lambda_d(3) == pytest.approx(math.pi**2 / 2, rel=1e-14)
        assert dirichlet_lambda_d(2) == pytest.approx(2.404825557695773**2 / 2, rel=1e-13)

    def test_box_energy_and_sup(self):
        assert box_ground_energy((0, 0), (1, 2)) == pytest.approx(0.5 * math.pi**2 * 1.25)
        assert sup_L2_on_Gd((0,), (1,)) == pytest.approx((1 + math.pi**2 / 2) ** -0.5)

    def test_rate_scaling(self):
        r1 = rate_I_D(1.0, 1, 0.75, (-1,), (1,))
        r2 = rate_I_D(2.0, 1, 0.75, (-1,), (1,))
        assert r2 / r1 == pytest.approx(2 ** (1 / 0.25), rel=1e-12)
        assert rate_I_D(0.0, 1, 0.75, (-1,), (1,)) == 0.0
        with pytest.raises(DomainError):
            rate_I_D(1.0, 1, 0.4, (-1,), (1,))


class TestConstants:
    def test_frozen_rho(self):
        r = rho_dp(1, 0.75, trend_radii=())
        assert r.value == pytest.approx(RHO_1, rel=1e-12)
        assert r.order == pytest.approx(2.0, abs=0.05)
        assert rho_dp(3, 1.5, trend_radii=()).value == pytest.approx(RHO_3, rel=1e-12)

    def test_rho_lattice_cross_check(self):
        # independent discretization: lattice on (-L, L) with exact cell kernels
        assert rho_lattice_1d(0.75, 40.0, 1 / 64) == pytest.approx(RHO_1, rel=5e-4)

    def test_domain_trend_increases(self):
        r = rho_dp(1, 0.75, trend_radii=(1.0, 2.0, 4.0, 8.0))
        vals = [v for _, v in r.trend]
        assert all(b >= a for a, b in zip(vals, vals[1:]))
        assert vals[-1] <= r.value * (1 + 1e-6)

    def test_identities(self):
        res = constant_identity_residuals(RHO_1, 0.75)
        assert max(res.values()) < 1e-12
        assert rho_from_sigma(sigma_from_rho(RHO_3, 1.5), 1.5) == pytest.approx(RHO_3, rel=1e-14)

    def test_M_at_inverse_rho_lattice(self):
        # sup {lam int g^2|x|^-p - 1/2||g'||^2} equals 1 at lam = 1/rho
        assert m_lattice_1d(1 / RHO_1, 0.75, 80.0, 1 / 128) == pytest.approx(1.0, abs=1e-3)

    def test_lambda1_frozen(self):
        assert Lambda1(1.0, 3, 1.5, sigma=sigma_from_rho(RHO_3, 1.5)) == pytest.approx(
            0.08059627821321369, rel=1e-10)

    def test_lambda1_theta_scaling(self):
        s = sigma_from_rho(RHO_3, 1.5)
        assert Lambda1(2.0, 3, 1.5, sigma=s) / Lambda1(1.0, 3, 1.5, sigma=s) == pytest.approx(2 ** 4)

    def test_lambda0_closed_form(self):
        assert Lambda0(1.0, 3, 2.0) == pytest.approx(144 ** (1 / 3) * math.pi, rel=1e-14)
        with pytest.raises(DomainError):
            Lambda0(0.0, 3, 2.0)

    def test_printed_comparison(self):
        c = printed_constant_comparison()
        assert c["flag"] == "DISCREPANCY"
        assert c["ratio_cube"] == pytest.approx(9 / 4, rel=1e-12)

    def test_M_rejects(self):
        with pytest.raises(DomainError):
            M_from_sigma(0.0, 1.0, 1.0)

    def test_richardson(self):
        vals = [1 + 0.1**2, 1 + 0.05**2, 1 + 0.025**2]
        v, order = richardson(vals)
        assert v == pytest.approx(1.0, abs=1e-14) and order == pytest.approx(2.0)
        assert richardson([1.0, 2.0, 1.5]) == (1.5, None)


class TestThresholdEquivalence:
    @pytest.mark.parametrize("scale", [1 / 32, 1.0, 8.0])
    def test_optimizer_matches_eigen(self, scale):
        gen = np.random.default_rng(3)
        A = gen.standard_normal((31, 31))
        A = scale * (A + A.T)
        sF, sG = threshold_equivalence_exact(A, (-1.0,), (1.0,), 1 / 16)
        t = threshold_equivalence_check(QuadraticFunctional(A), (-1.0,), (1.0,), 1 / 16)
        assert t.sup_F == pytest.approx(sF, rel=1e-7, abs=1e-9)
        assert t.sup_G == pytest.approx(sG, rel=1e-7, abs=1e-9)
        assert t.agree and (t.pred_F == (sF > 1))

    def test_potential_functional(self):
        V = np.linspace(0, 3, 15)
        Z = potential_functional(V, 0.125)
        v = np.ones(15)
        val, grad = Z(v)
        assert val == pytest.approx(0.125 * V.sum())
        np.testing.assert_allclose(grad, 0.25 * V)
