import math

import numpy as np
import pytest
from scipy import integrate

from rpp.cutoff import KernelSpec, kernel_mass_exact
from rpp.errors import DomainError, GeometryError, SingularityError
from rpp.field import PoissonSample, Window, sample_field
from rpp.potential import (GridFunction, PotentialEvaluator, cell_weights, cell_weights_1d,
                           compensated_functional, far_evaluator, full_tail_std, inner_riesz,
                           kernel_antiderivative_1d, split_functionals, zeta_epsilon)


def _bump(lo=-1.0, hi=1.0, h=1 / 64, d=1):
    return GridFunction.from_function(lambda x: np.prod(np.cos(0.5 * math.pi * x), axis=-1),
                                      [lo] * d, [hi] * d, h)


class TestGridFunction:
    def test_norms_of_sine(self):
        g = GridFunction.from_function(lambda x: np.sin(math.pi * x[..., 0]), [0.0], [1.0], 1 / 512)
        assert g.norm2() == pytest.approx(0.5, rel=1e-10)
        assert g.grad_norm2() == pytest.approx(math.pi**2 / 2, rel=1e-5)

    def test_rescaled_keeps_l2(self):
        g = _bump()
        r = g.rescaled(3.0)
        assert r.norm2() == pytest.approx(g.norm2(), rel=1e-14)
        assert r.grad_norm2() == pytest.approx(g.grad_norm2() / 9, rel=1e-12)

    def test_normalized(self):
        assert _bump(d=2, h=1 / 16).normalized_sobolev().sobolev_norm2() == pytest.approx(1.0)

    def test_rejects(self):
        with pytest.raises(DomainError):
            GridFunction((0.0,), 0.1, np.ones(5))
        with pytest.raises(DomainError):
            GridFunction.from_function(lambda x: x[..., 0], [0.0], [1.0], 0.3)
        with pytest.raises(DomainError):
            GridFunction((0.0,), 0.1, np.array([0.0, np.nan, 0.0]))

    def test_support_box(self):
        lo, hi = _bump(h=0.25).support_box()
        np.testing.assert_allclose(lo, [-0.875])
        np.testing.assert_allclose(hi, [0.875])


class TestCellWeights:
    def test_antiderivative_derivative(self):
        spec = KernelSpec(1, 0.75, "far", 1.0, 0.3, 0, radius=20.0)
        u = np.array([0.5, 2.0, 7.0, 19.0])
        fd = (kernel_antiderivative_1d(spec, u + 1e-6) - kernel_antiderivative_1d(spec, u - 1e-6)) / 2e-6
        np.testing.assert_allclose(fd, spec.profile(u), rtol=1e-6)

    def test_1d_exact_against_quad(self):
        spec = KernelSpec(1, 0.75, radius=20.0)
        w = cell_weights_1d(spec, np.array([0.0, 0.3]), 0.1, 0.02)[0]
        ref0 = integrate.quad(lambda y: abs(y - 0.02) ** -0.75, -0.05, 0.05, points=[0.02])[0]
        ref1 = integrate.quad(lambda y: abs(y - 0.02) ** -0.75, 0.25, 0.35)[0]
        np.testing.assert_allclose(w, [ref0, ref1], rtol=1e-10)

    def test_2d_weights_sum_to_box_integral(self):
        # the cells tile [-1, 1]^2, so the weights sum to the box integral of |y - x|^{-p}
        g = GridFunction((-0.9375,) * 2, 0.125, np.ones((16, 16)), zero_boundary=False)
        x = np.array([0.03, -0.01])
        w = cell_weights(KernelSpec(2, 1.5, radius=10.0), g, x)
        from rpp.specfun import riesz_box_integral

        assert w.sum() == pytest.approx(riesz_box_integral([-1, -1], [1, 1], x, 1.5), rel=1e-2)

    def test_inner_riesz_1d(self):
        g = _bump(h=1 / 16)
        x = 0.1
        c, sq = g.nodes().ravel(), g.values.ravel() ** 2
        ref = sum(s * integrate.quad(lambda y: abs(y - x) ** -0.75, a - g.h / 2, a + g.h / 2,
                                     points=[x] if abs(a - x) < g.h / 2 else None)[0]
                  for a, s in zip(c, sq) if s)
        assert inner_riesz(g, [x], p=0.75) == pytest.approx(ref, rel=1e-9)
        with pytest.raises(DomainError):
            inner_riesz(g, [x])


class TestEvaluator:
    def _sample(self, seed=1, half=30.0, d=1):
        return sample_field(Window.cube(d, half), 1.0, seed)

    def test_matches_brute_force(self):
        s = self._sample()
        spec = KernelSpec(1, 0.75, radius=20.0)
        ev = PotentialEvaluator(s, spec, 1.0)
        xs = np.array([[0.0], [3.3], [-5.1]])
        vals, floored = ev.evaluate(xs)
        for x, v in zip(xs, vals):
            r = np.abs(s.points[:, 0] - x[0])
            brute = np.sum(r[r <= 20.0] ** -0.75) - kernel_mass_exact(spec)
            assert v == pytest.approx(brute, rel=1e-12, abs=1e-12)
        assert floored == 0

    def test_blocked_equals_unblocked(self, monkeypatch):
        import rpp.potential as pot

        s = self._sample(seed=4)
        ev = PotentialEvaluator(s, KernelSpec(1, 0.75, radius=20.0), 1.0)
        xs = np.linspace(-8, 8, 101)[:, None]
        a, _ = ev.evaluate(xs)
        monkeypatch.setattr(pot, "EVAL_PAIRS", 50)
        b, _ = ev.evaluate(xs)
        np.testing.assert_allclose(a, b, rtol=1e-13, atol=1e-13)

    def test_geometry_and_collision(self):
        s = self._sample()
        ev = PotentialEvaluator(s, KernelSpec(1, 0.75, radius=20.0), 1.0)
        with pytest.raises(GeometryError):
            ev([15.0])
        with pytest.raises(SingularityError):
            ev([s.points[np.argmin(np.abs(s.points[:, 0]))][0]])

    def test_needs_finite_radius(self):
        with pytest.raises(DomainError):
            PotentialEvaluator(self._sample(), KernelSpec(1, 0.75), 1.0)
        with pytest.raises(DomainError):
            PotentialEvaluator(self._sample(), KernelSpec(1, 0.75, radius=20.0), 1.0, tail_tolerance=0.01)

    def test_tail_std(self):
        # d=1, p=3/4: integral over |x|>R of |x|^{-3/2} is 4 R^{-1/2}
        assert full_tail_std(1, 0.75, 16.0) == pytest.approx(1.0, rel=1e-14)

    def test_far_mean_and_variance(self):
        # compensated far potential: mean 0, variance eps * int k^2
        # (a chosen so the cutoff scale is near 1)
        eps, R = 0.5, 10.0
        spec = KernelSpec(1, 0.75, "far", 0.002, eps, 0, R)
        var = 2 * eps * integrate.quad(lambda r: spec.profile(r) ** 2, 0, R, points=spec.breakpoints()[:3],
                                       limit=200)[0]
        vals = []
        for seed in range(1500):
            s = sample_field(Window.cube(1, 11.0), eps, seed)
            vals.append(far_evaluator(s, 0.75, 0.002, eps, 0, R)([0.0]))
        vals = np.array(vals)
        assert abs(vals.mean()) < 4 * math.sqrt(var / vals.size)
        assert vals.var(ddof=1) == pytest.approx(var, rel=0.12)


class TestFunctionals:
    def test_fubini_against_pointwise(self):
        g = _bump(h=1 / 16)
        s = sample_field(Window.cube(1, 8.0), 0.7, 3)
        spec = KernelSpec(1, 0.75, radius=5.0)
        val = compensated_functional(g, s, 0.7, spec)
        pts = s.points[np.abs(s.points[:, 0]) <= 6.0]
        brute = sum(inner_riesz(g, y, kernel=spec) for y in pts) - 0.7 * g.norm2() * kernel_mass_exact(spec)
        assert val == pytest.approx(brute, rel=1e-10)

    def test_split_sums_to_full(self):
        g = _bump(h=1 / 16)
        s = sample_field(Window.cube(1, 8.0), 0.4, 5)
        near, far = split_functionals(g, s, 0.4, 0.75, 1e-4, 0, 5.0)
        assert near != 0 and far != 0
        assert near + far == pytest.approx(zeta_epsilon(g, s, 0.4, 0.75, 5.0), rel=1e-10, abs=1e-10)

    def test_window_too_small(self):
        g = _bump(h=1 / 16)
        s = sample_field(Window.cube(1, 3.0), 1.0, 5)
        with pytest.raises(GeometryError):
            zeta_epsilon(g, s, 1.0, 0.75, 5.0)

    def test_empty_sample(self):
        g = _bump(h=1 / 16)
        s = PoissonSample(np.zeros((0, 1)), 1.0, Window.cube(1, 8.0), 0)
        spec = KernelSpec(1, 0.75, radius=5.0)
        assert compensated_functional(g, s, 1.0, spec) == pytest.approx(-g.norm2() * kernel_mass_exact(spec))
