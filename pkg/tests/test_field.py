import math

import numpy as np
import pytest
from scipy import stats

from rpp.cutoff import KernelSpec, kernel_mass_exact
from rpp.errors import DomainError, GeometryError
from rpp.field import (Estimate, Indicator, PoissonSample, RadialFunction, Window, batch_compensated,
                       campbell_log_mgf, compensated_integral, max_count_log_tail, max_count_median,
                       poisson_log_tail, poisson_tail_exact, sample_field, scaled_sample,
                       stirling_log_tail)
from rpp.specfun import psi


class TestWindow:
    def test_volumes(self):
        assert Window.box([0, 0], [2, 3]).volume == 6.0
        assert Window.ball([0, 0, 0], 1.0).volume == pytest.approx(4 * math.pi / 3)

    @pytest.mark.parametrize("kw", [dict(kind="box", lo=(0.0,), hi=(0.0,)),
                                    dict(kind="ball", center=(0.0,), radius=0.0),
                                    dict(kind="disc")])
    def test_rejects(self, kw):
        with pytest.raises(DomainError):
            Window(**kw)

    def test_inner_distance_and_guard(self):
        w = Window.cube(2, 5.0)
        assert w.inner_distance([1.0, 0.0]) == 4.0
        w.require_ball([0.0, 0.0], 5.0)
        with pytest.raises(GeometryError):
            w.require_ball([1.0, 0.0], 4.5)

    def test_uniform_stays_inside(self):
        gen = np.random.default_rng(0)
        for w in (Window.cube(3, 1.0), Window.ball([1.0, 2.0], 0.5)):
            assert w.contains(w.uniform(gen, 500)).all()

    def test_dict_roundtrip(self):
        for w in (Window.cube(2, 1.5), Window.ball([0.0], 2.0)):
            assert Window.from_dict(w.to_dict()) == w


class TestSampling:
    def test_reproducible(self):
        w = Window.cube(2, 3.0)
        a, b = sample_field(w, 2.0, 11), sample_field(w, 2.0, 11)
        np.testing.assert_array_equal(a.points, b.points)
        assert len(sample_field(w, 2.0, 12)) != len(a) or not np.array_equal(
            sample_field(w, 2.0, 12).points, a.points)

    def test_empty_and_rejects(self):
        w = Window.cube(1, 1.0)
        assert len(sample_field(w, 0.0, 1)) == 0
        with pytest.raises(DomainError):
            sample_field(w, -1.0, 1)
        with pytest.raises(DomainError):
            scaled_sample(w, 0.0, 1)

    def test_counts_are_poisson(self):
        # counts in a fixed subwindow: mean and variance both equal intensity * volume
        w = Window.cube(1, 5.0)
        counts = [len(sample_field(w, 3.0, s).points) for s in range(400)]
        assert np.mean(counts) == pytest.approx(30.0, abs=4 * math.sqrt(30 / 400))
        assert np.var(counts, ddof=1) / np.mean(counts) == pytest.approx(1.0, abs=0.25)

    def test_csv_roundtrip(self):
        s = sample_field(Window.cube(2, 1.0), 5.0, 3)
        back = PoissonSample.from_csv(s.to_csv())
        np.testing.assert_array_equal(back.points, s.points)
        assert back.window == s.window and back.seed == 3 and back.intensity == 5.0


class TestCompensated:
    def test_single_sample(self):
        s = sample_field(Window.cube(1, 2.0), 1.0, 4)
        val = compensated_integral(s, lambda x: np.ones(len(x)), 1.0, 4.0)
        assert val == len(s) - 4.0

    @pytest.mark.parametrize("threads", [1, 3])
    def test_batch_mean_zero_and_variance(self, threads):
        # compensated integral has mean 0 and variance density * int f^2
        w = Window.cube(1, 2.0)
        vals = batch_compensated(w, 2.0, lambda x: x[:, 0] ** 2, 16 / 3, 20000, 9, chunk=1000,
                                 threads=threads)
        assert abs(vals.mean()) < 4 * vals.std() / math.sqrt(vals.size)
        assert vals.var() == pytest.approx(2.0 * 64 / 5, rel=0.05)

    def test_batch_thread_invariance(self):
        w = Window.cube(1, 2.0)
        f = lambda x: np.exp(-x[:, 0] ** 2)  # noqa: E731
        a = batch_compensated(w, 1.0, f, 1.0, 3000, 5, chunk=256, threads=1)
        b = batch_compensated(w, 1.0, f, 1.0, 3000, 5, chunk=256, threads=4)
        np.testing.assert_array_equal(a, b)

    def test_estimate(self):
        e = Estimate.from_samples([1.0, 2.0, 3.0, 4.0])
        assert e.value == 2.5 and e.std_error == pytest.approx(math.sqrt(5 / 3) / 2)
        assert e.z_against(2.5) == 0.0
        with pytest.raises(DomainError):
            Estimate.from_samples([1.0])


class TestCampbell:
    def test_indicator(self):
        v = campbell_log_mgf(Indicator(2.0, 0.5), 3.0, -1, 1.5)
        assert v == pytest.approx(3.0 * 2.0 * psi(0.75), rel=1e-15)

    def test_gaussian_profile(self):
        # lower moment of theta e^{-r^2} in d=1 against direct quadrature
        from scipy import integrate

        fn = RadialFunction(1, lambda r: np.exp(-np.asarray(r) ** 2), r_max=12.0)
        ref = 2 * integrate.quad(lambda r: psi(2.0 * math.exp(-r * r)), 0, 12)[0]
        assert campbell_log_mgf(fn, 1.0, -1, 2.0) == pytest.approx(ref, rel=1e-10)

    def test_mc_agreement_far_kernel(self):
        # log E exp{-theta int k d(omega - dx)} from sampled fields
        spec = KernelSpec(1, 0.75, "far", 1.0, 0.3, 0, radius=15.0)
        w = Window.cube(1, 15.0)
        mass = kernel_mass_exact(spec)
        vals = batch_compensated(w, 1.0, lambda x: spec.profile(np.abs(x[:, 0])), mass, 20000, 2)
        mc = math.log(np.mean(np.exp(-vals)))
        assert mc == pytest.approx(campbell_log_mgf(spec, 1.0, -1, 1.0), abs=0.02)

    def test_rejects(self):
        with pytest.raises(DomainError):
            campbell_log_mgf(KernelSpec(1, 0.75), 1.0, +1, 1.0)
        with pytest.raises(DomainError):
            campbell_log_mgf(Indicator(1.0), 1.0, 0, 1.0)
        assert campbell_log_mgf(Indicator(1.0), 1.0, 1, 0.0) == 0.0


class TestPoissonTails:
    @pytest.mark.parametrize("mu,k", [(0.3, 1), (2.0, 3), (5.0, 2), (0.01, 40), (1.0, 60)])
    def test_against_scipy(self, mu, k):
        ref = stats.poisson.logsf(k - 1, mu)
        assert poisson_log_tail(mu, k) == pytest.approx(ref, rel=1e-10)

    def test_deep_tail_mpmath(self):
        import mpmath as mp

        mp.mp.dps = 40
        ref = mp.log(mp.nsum(lambda j: mp.e ** -1 / mp.factorial(j), [400, mp.inf]))
        assert poisson_log_tail(1.0, 400) == pytest.approx(float(ref), rel=1e-12)

    def test_deep_tail_finite(self):
        v = poisson_log_tail(1e-3, 5000)
        assert math.isfinite(v) and v < -40000
        assert v == pytest.approx(stirling_log_tail(1e-3, 5000), rel=1e-3)

    def test_exact_and_zero(self):
        assert poisson_tail_exact(2.0, 0) == 1.0
        assert poisson_tail_exact(2.0, 1) == pytest.approx(1 - math.exp(-2.0), rel=1e-14)
        with pytest.raises(DomainError):
            poisson_log_tail(1.0, -1)

    def test_max_count(self):
        assert max_count_log_tail(1.0, 2.0, 3) == pytest.approx(poisson_log_tail(2.0, 3), rel=1e-13)
        q = poisson_tail_exact(0.5, 2)
        assert max_count_log_tail(10, 0.5, 2) == pytest.approx(math.log(1 - (1 - q) ** 10), rel=1e-12)
        # underflow branch: n q
        assert max_count_log_tail(1e9, 1e-3, 400) == pytest.approx(
            math.log(1e9) + poisson_log_tail(1e-3, 400), rel=1e-12)

    def test_max_median(self):
        assert max_count_median(1, 0.5) == 0
        med = max_count_median(1000, 1.0)
        assert max_count_log_tail(1000, 1.0, med + 1) < math.log(0.5) <= max_count_log_tail(1000, 1.0, med)
