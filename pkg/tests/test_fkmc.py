import math

import numpy as np
import pytest
from scipy import integrate, stats

from rpp.errors import DomainError, RegimeError
from rpp.field import Estimate
from rpp.fkmc import (FKConfig, GridPotential, PathSample, _decide, _floored_mass_1d, _power_product,
                      annealed_two_ways, ball_log_survival, box_log_survival, brownian_paths,
                      campbell_path_log_mgf, confinement_probability, confinement_series,
                      fk_bound_suite, partition_estimator, random_bounded_potential, refine_path,
                      restricted_moment, simulate_path)
from rpp.specfun import psi


def _images(t, r, terms=30):
    """Reflection-principle form of the interval confinement probability."""
    s = math.sqrt(t)
    return sum((-1) ** k * (stats.norm.cdf((2 * k + 1) * r / s) - stats.norm.cdf((2 * k - 1) * r / s))
               for k in range(-terms, terms + 1))


class TestPaths:
    def test_shapes_and_start(self):
        gen = np.random.default_rng(0)
        p = brownian_paths(gen, 5, 8, 0.1, 2, start=[1.0, -1.0])
        assert p.shape == (5, 9, 2)
        np.testing.assert_array_equal(p[:, 0], np.tile([1.0, -1.0], (5, 1)))

    def test_increment_variance(self):
        p = brownian_paths(np.random.default_rng(1), 20000, 4, 0.25, 1)
        assert np.var(p[:, -1, 0]) == pytest.approx(1.0, rel=0.05)

    def test_simulate_reproducible_and_step_check(self):
        a = simulate_path(1.0, 0.125, 2, 5)
        np.testing.assert_array_equal(a.positions, simulate_path(1.0, 0.125, 2, 5).positions)
        np.testing.assert_allclose(a.times[-1], 1.0)
        with pytest.raises(DomainError):
            simulate_path(1.0, 0.3, 1, 0)

    def test_refine_keeps_nodes(self):
        a = simulate_path(1.0, 0.25, 1, 3)
        b = refine_path(a, 3)
        assert b.dt == 0.125 and b.positions.shape[0] == 9
        np.testing.assert_array_equal(b.positions[0::2], a.positions)

    def test_bridge_variance(self):
        # midpoint of a bridge over dt has conditional variance dt / 4
        base = PathSample(1.0, np.zeros((2001, 1)), 2000.0)
        mids = refine_path(base, 8).positions[1::2, 0]
        assert np.var(mids) == pytest.approx(0.25, rel=0.08)


class TestConfinement:
    @pytest.mark.parametrize("t", [0.3, 1.0, 4.0])
    def test_series_vs_images(self, t):
        assert confinement_series(t, 1.0) == pytest.approx(_images(t, 1.0), abs=1e-13)

    def test_series_scaling(self):
        assert confinement_series(2.0, 2.0) == pytest.approx(confinement_series(0.5, 1.0), rel=1e-14)

    def test_mc_with_bridge_correction(self):
        est = confinement_probability(1.0, 1.0, 1, 20000, dt=1 / 64, seed=2)
        assert abs(est.z_against(confinement_series(1.0, 1.0))) < 4

    def test_uncorrected_is_biased_up(self):
        exact = confinement_series(1.0, 1.0)
        raw = confinement_probability(1.0, 1.0, 1, 20000, dt=1 / 16, seed=2, correction=False)
        assert raw.z_against(exact) > 4

    def test_thread_invariance(self):
        a = confinement_probability(1.0, 1.0, 2, 3000, dt=1 / 32, seed=1, chunk=500, threads=1)
        b = confinement_probability(1.0, 1.0, 2, 3000, dt=1 / 32, seed=1, chunk=500, threads=3)
        assert a == b

    def test_killing_weights(self):
        paths = np.array([[[0.0], [0.5], [0.2]], [[0.0], [1.2], [0.1]]])
        ls = box_log_survival(paths, [-1.0], [1.0], 0.1)
        assert np.isfinite(ls[0]) and ls[0] < 0 and ls[1] == -np.inf
        assert box_log_survival(paths, [-1.0], [1.0], 0.1, correction=False)[0] == 0.0
        # a single step from a to b inside (-inf, 1): survival 1 - exp(-2 (1-a)(1-b)/dt)
        one = np.array([[[0.0], [0.5]]])
        ref = math.log1p(-math.exp(-2 * 1.0 * 0.5 / 0.1)) + math.log1p(-math.exp(-2 * 1.0 * 1.5 / 0.1))
        assert box_log_survival(one, [-1.0], [1.0], 0.1)[0] == pytest.approx(ref, rel=1e-12)
        ball = ball_log_survival(np.zeros((1, 3, 2)), 1.0, 0.5)
        assert ball[0] == pytest.approx(2 * math.log1p(-math.exp(-4.0)), rel=1e-12)

    def test_rejects(self):
        with pytest.raises(DomainError):
            confinement_probability(1.0, 0.0, 1, 10)


class TestPartition:
    def _cfg(self, **kw):
        base = dict(theta=0.5, sign=-1, t=0.25, dt=1 / 16, n_paths=200, p=0.75, d=1, R=10.0, seed=3)
        base.update(kw)
        return FKConfig(**base)

    def test_theta_zero_is_one(self):
        e = partition_estimator(self._cfg(theta=0.0))
        assert e.value == 1.0 and e.std_error == 0.0

    def test_config_rejects(self):
        with pytest.raises(DomainError):
            self._cfg(p=0.4)
        with pytest.raises(RegimeError):
            FKConfig(1.0, 1, 1.0, 0.1, 10, 2.5, 3, 5.0)
        with pytest.raises(DomainError):
            self._cfg(dt=0.5)
        with pytest.raises(DomainError):
            self._cfg(sign=0)

    def test_window_covers_paths(self):
        cfg = self._cfg()
        assert cfg.window().inner_distance([0.0]) == pytest.approx(cfg.path_reach + cfg.R)

    def test_estimate_and_determinism(self):
        cfg = self._cfg()
        a = partition_estimator(cfg, chunk=64, threads=1)
        b = partition_estimator(cfg, chunk=64, threads=3)
        assert a.value == b.value and a.std_error == b.std_error
        assert a.value > 0 and a.extra["log_mean"] == pytest.approx(math.log(a.value), rel=1e-12)
        assert len(a.extra["chunks"]) == 4

    def test_upper_sign_runs(self):
        e = partition_estimator(self._cfg(sign=1))
        assert e.value > 0 and math.isfinite(e.value)


class TestAnnealed:
    def test_floored_mass(self):
        ref = 2 * (1e-3 * 1e-3**-0.75 + integrate.quad(lambda u: u**-0.75, 1e-3, 5.0)[0])
        assert _floored_mass_1d(0.75, 5.0, 1e-3) == pytest.approx(ref, rel=1e-10)

    def test_constant_path_against_quadrature(self):
        # a path at rest: int f d(omega - dy) with f = t k_floored(|y|)
        t, dt, p, R, rmin, th = 0.5, 1 / 8, 0.75, 5.0, 1e-3, 0.7
        mids = np.zeros(4)
        f = lambda u: t * max(abs(u), rmin) ** -p  # noqa: E731
        body = 2 * integrate.quad(lambda u: psi(th * f(u)), 0, R, points=[rmin], limit=200,
                                  epsabs=1e-13)[0]
        ref = body + th * t * (2 * R**0.25 / 0.25 - _floored_mass_1d(p, R, rmin))
        assert campbell_path_log_mgf(mids, dt, p, R, rmin, th) == pytest.approx(ref, rel=1e-8)

    def test_two_ways_agree(self):
        cfg = FKConfig(0.5, -1, 0.25, 1 / 16, 10, 0.75, 1, 8.0, seed=4, window_half=3.0)
        res = annealed_two_ways(cfg, 400, 100, chunk=100)
        assert abs(res.z) < 4
        assert res.var_reduced < res.var_double

    def test_rejects(self):
        with pytest.raises(DomainError):
            annealed_two_ways(FKConfig(0.5, 1, 0.25, 1 / 16, 10, 0.75, 1, 8.0), 10, 10)
        with pytest.raises(DomainError):
            annealed_two_ways(FKConfig(0.5, -1, 0.25, 1 / 16, 10, 1.5, 2, 8.0), 10, 10)


class TestBounds:
    def test_decide(self):
        assert _decide("a", "upper", 1.0, 0.01, 2.0, 0.0).verdict == "pass"
        assert _decide("a", "upper", 2.0, 0.01, 1.0, 0.0).verdict == "violation"
        assert _decide("a", "lower", 1.0, 0.01, 2.0, 0.0).verdict == "violation"
        assert _decide("a", "upper", 1.0, 0.9, 1.5, 0.0).verdict == "inconclusive"

    def test_power_product(self):
        e = Estimate(4.0, 0.4, 10)
        v, se = _power_product([(e, 0.5)], 3.0)
        assert v == pytest.approx(6.0) and se == pytest.approx(6.0 * 0.5 * 0.1)
        assert _power_product([(Estimate(0.0, 0.1, 10), 1.0)]) == (0.0, math.inf)

    def test_grid_potential(self):
        g = GridPotential((-1.0,), (1.0,), np.array([0.0, 1.0, 0.0]))
        np.testing.assert_allclose(g(np.array([[-0.5], [0.0], [2.0]])), [0.5, 1.0, 0.0])
        g2 = GridPotential((0.0, 0.0), (1.0, 1.0), np.array([[0.0, 1.0], [1.0, 2.0]]))
        assert g2(np.array([0.5, 0.5])) == pytest.approx(1.0)
        assert g2(np.array([3.0, 3.0])) == pytest.approx(2.0)

    def test_restricted_constant_potential(self):
        xi = GridPotential((-2.0,), (2.0,), np.full(5, 0.8))
        est = restricted_moment((-1.0,), (1.0,), (0.0,), 0.5, xi, 20000, 1 / 64, 6)
        ref = math.exp(0.4) * confinement_series(0.5, 1.0)
        assert abs(est.z_against(ref)) < 4
        with pytest.raises(DomainError):
            restricted_moment((-1.0,), (1.0,), (1.5,), 0.5, xi, 10, 0.1, 0)

    def test_suite_on_random_potential(self):
        xi = random_bounded_potential(np.random.default_rng(2))
        assert np.max(np.abs(xi.values)) <= 2.0 + 1e-12
        checks = fk_bound_suite((-3.0,), (3.0,), xi, 1.0, 0.5, 2.0, 2.0, 4000, 1 / 64, 1, h=1 / 64)
        assert [c.name for c in checks] == ["integrated-upper", "integrated-lower", "origin-upper",
                                            "origin-lower"]
        assert all(c.verdict == "pass" for c in checks)

    def test_suite_rejects(self):
        xi = random_bounded_potential(np.random.default_rng(2))
        with pytest.raises(DomainError):
            fk_bound_suite((-3.0,), (3.0,), xi, 1.0, 0.5, 3.0, 2.0, 10, 0.1, 0)
        with pytest.raises(DomainError):
            fk_bound_suite((-3.0,), (3.0,), xi, 1.0, 1.5, 2.0, 2.0, 10, 0.1, 0)
        with pytest.raises(DomainError):
            fk_bound_suite((1.0,), (3.0,), xi, 1.0, 0.5, 2.0, 2.0, 10, 0.1, 0)
