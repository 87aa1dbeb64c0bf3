import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from rpp.cutoff import (KernelSpec, alpha, alpha_prime, interval_integral_exact, kernel_eval,
                        kernel_mass, kernel_mass_exact, mass_scaling_exponent, near_kernel_mass)
from rpp.errors import DomainError, SingularityError


class TestAlpha:
    def test_plateau_and_support(self):
        np.testing.assert_array_equal(alpha(np.array([0.0, 0.5, 1.0])), 1.0)
        np.testing.assert_array_equal(alpha(np.array([3.0, 4.0, 100.0])), 0.0)

    def test_midpoint(self):
        assert alpha(2.0) == pytest.approx(0.5, abs=1e-15)

    def test_derivative_matches_finite_difference(self):
        x = np.linspace(0.2, 3.8, 37)
        fd = (alpha(x + 1e-6) - alpha(x - 1e-6)) / 2e-6
        np.testing.assert_allclose(alpha_prime(x), fd, atol=1e-6)

    def test_c1_at_joins(self):
        assert alpha_prime(1.0) == pytest.approx(0.0, abs=1e-14)
        assert alpha_prime(3.0) == pytest.approx(0.0, abs=1e-14)

    def test_negative_rejected(self):
        with pytest.raises(DomainError):
            alpha(-0.1)

    @settings(max_examples=60, deadline=None)
    @given(st.floats(0.0, 10.0))
    def test_monotone_in_unit_interval(self, x):
        assert 0.0 <= alpha(x) <= 1.0
        assert alpha(x + 0.01) <= alpha(x) + 1e-15


class TestKernelSpec:
    def test_near_plus_far_is_full(self):
        near = KernelSpec(2, 1.5, "near", 1.0, 0.1, 0)
        far = near.with_variant("far")
        r = np.geomspace(1e-3, 1e3, 50)
        np.testing.assert_allclose(near.profile(r) + far.profile(r), r**-1.5, rtol=1e-13)

    def test_scales(self):
        k0 = KernelSpec(3, 2.0, "near", 2.0, 0.01, 0)
        assert k0.scale == pytest.approx(0.01 ** (3 / 3) / 2.0)
        k1 = KernelSpec(3, 2.0, "near", 2.0, 0.01, 1)
        assert k1.scale == pytest.approx(math.log(100) ** -0.5 / 2.0)

    @pytest.mark.parametrize("kw", [dict(d=1, p=0.5), dict(d=1, p=1.0), dict(d=3, p=1.2),
                                    dict(d=2, p=1.5, variant="other"),
                                    dict(d=2, p=1.5, variant="near", eps=1.0),
                                    dict(d=2, p=1.5, variant="near", a=0.0),
                                    dict(d=2, p=1.5, radius=0.0)])
    def test_rejects(self, kw):
        with pytest.raises(DomainError):
            KernelSpec(**kw)

    def test_pole(self):
        with pytest.raises(SingularityError):
            kernel_eval(KernelSpec(2, 1.5), [0.0, 0.0])
        assert kernel_eval(KernelSpec(2, 1.5, "far", 1.0, 0.5), [0.0, 0.0]) == 0.0

    def test_pieces_reproduce_profile(self):
        spec = KernelSpec(3, 2.0, "far", 1.0, 0.3, 0, radius=40.0)
        for r0, r1, c in spec.pieces():
            r = np.linspace(r0, min(r1, 60.0), 7)[1:-1]
            val = r ** (-spec.p) * np.polynomial.polynomial.polyval(r, c)
            np.testing.assert_allclose(val, spec.profile(r), rtol=1e-12)


class TestMasses:
    @pytest.mark.parametrize("spec", [KernelSpec(1, 0.75, "near", 1.0, 0.1, 0),
                                      KernelSpec(2, 1.5, "near", 0.5, 0.2, 1),
                                      KernelSpec(3, 2.5, "near", 1.0, 0.5, 0),
                                      KernelSpec(3, 2.0, "far", 1.0, 0.5, 0, radius=7.0),
                                      KernelSpec(2, 1.5, "full", radius=2.0)])
    def test_exact_vs_quadrature(self, spec):
        assert kernel_mass_exact(spec) == pytest.approx(kernel_mass(spec), rel=1e-10)

    def test_full_mass_closed_form(self):
        spec = KernelSpec(3, 2.0, radius=10.0)
        assert kernel_mass_exact(spec) == pytest.approx(40 * math.pi, rel=1e-14)

    def test_near_mass_needs_near(self):
        with pytest.raises(DomainError):
            near_kernel_mass(KernelSpec(2, 1.5))

    def test_scaling_exponent(self):
        # the near-kernel mass scales like the cutoff radius to the power d - p
        assert mass_scaling_exponent(3, 2.0) == pytest.approx(-(2 + 3 - 2.0) / 3, abs=1e-9)

    @pytest.mark.parametrize("a,b,c", [(-1.0, 2.0, 0.0), (0.5, 3.0, 0.0), (-4.0, -0.1, 0.3),
                                       (-30.0, 30.0, 1.0)])
    def test_interval_integral(self, a, b, c):
        spec = KernelSpec(1, 0.75, "far", 0.5, 0.3, 0, radius=20.0)
        pts = sorted({c - x for x in spec.breakpoints()} | {c + x for x in spec.breakpoints()} | {c})
        pts = [x for x in pts if a < x < b]
        ref = integrate.quad(lambda y: spec.profile(abs(y - c)), a, b, points=pts or None, limit=200,
                             epsabs=1e-13, epsrel=1e-12)[0]
        assert interval_integral_exact(spec, a, b, c) == pytest.approx(ref, rel=1e-9, abs=1e-12)
