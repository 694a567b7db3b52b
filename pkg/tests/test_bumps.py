"""Tests for the smooth test functions."""

from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from svepath.bumps import HeatKernelFunction, QuadraticBump, ThetaBump
from svepath.theta_kernel import ThetaHeatKernel, delta_theta_apply
from svepath.types.core import DomainFunction, SmoothFunction


def central_d1(f, x, h=1e-5):
    return (f.value(x + h) - f.value(x - h)) / (2 * h)


def central_d2(f, x, h=1e-4):
    return (f.value(x + h) - 2 * f.value(x) + f.value(x - h)) / (h * h)


class TestThetaBump:
    """Bump in u = (|x|/c)^{2+θ}."""

    def test_protocols(self):
        bump = ThetaBump(theta=1.0, c=2.0)
        assert isinstance(bump, SmoothFunction)
        assert isinstance(bump, DomainFunction)

    def test_support_and_peak(self):
        bump = ThetaBump(theta=2.0, c=1.5)
        assert bump.value(0.0) == pytest.approx(math.exp(-1.0))
        assert bump.value(1.5) == 0.0
        assert bump.value(-2.0) == 0.0
        assert bump.radius == 1.5

    def test_derivatives_match_differences(self):
        bump = ThetaBump(theta=1.0, c=2.0)
        x = np.array([-1.7, -0.9, -0.3, 0.4, 1.1, 1.6])
        np.testing.assert_allclose(bump.d1(x), central_d1(bump, x), atol=1e-7)
        np.testing.assert_allclose(bump.d2(x), central_d2(bump, x), atol=1e-5)

    @given(
        theta=st.sampled_from([0.5, 1.0, 2.0, 4.0]),
        x=st.floats(min_value=0.05, max_value=1.9),
        sign=st.sampled_from([-1.0, 1.0]),
    )
    @settings(max_examples=40, deadline=None)
    def test_closed_form_delta_theta(self, theta, x, sign):
        """The u-variable formula agrees with the generic operator off the origin."""
        bump = ThetaBump(theta=theta, c=2.0)
        direct = bump.delta_theta(sign * x)
        generic = delta_theta_apply(theta, bump, sign * x)
        assert direct == pytest.approx(generic, rel=1e-9, abs=1e-12)

    def test_delta_theta_at_origin(self):
        """Δ_θφ(0) = (2/(q c^q)) Φ'(0) = -2/(e q c^q)."""
        bump = ThetaBump(theta=2.0, c=2.0)
        expected = -2.0 / (math.e * 4.0 * 2.0**4)
        assert bump.delta_theta(0.0) == pytest.approx(expected, rel=1e-14)
        assert bump.delta_theta(1e-4) == pytest.approx(expected, rel=1e-6)

    def test_array_shape_preserved(self):
        bump = ThetaBump(theta=1.0, c=1.0)
        assert bump.value(np.zeros((2, 3))).shape == (2, 3)
        assert isinstance(bump.delta_theta(0.2), float)


class TestQuadraticBump:
    """exp(-1/(1 - ((x - center)/c)²))."""

    def test_peak_at_center(self):
        bump = QuadraticBump(c=1.0, center=0.5)
        assert bump.value(0.5) == pytest.approx(math.exp(-1.0))
        assert bump.value(1.5) == 0.0
        assert bump.radius == 1.5

    def test_derivatives_match_differences(self):
        bump = QuadraticBump(c=2.0)
        x = np.array([-1.5, -0.5, 0.2, 1.3])
        np.testing.assert_allclose(bump.d1(x), central_d1(bump, x), atol=1e-7)
        np.testing.assert_allclose(bump.d2(x), central_d2(bump, x), atol=1e-5)

    def test_no_closed_form_delta_theta(self):
        """Δ_θ of this family is only available through the generic operator off 0."""
        bump = QuadraticBump(c=2.0)
        assert not isinstance(bump, DomainFunction)
        assert np.isfinite(delta_theta_apply(1.0, bump, 0.7))


class TestHeatKernelFunction:
    """p_t as a test function."""

    def test_value_and_origin(self):
        k = ThetaHeatKernel.from_alpha(0.25)
        f = HeatKernelFunction(kernel=k, t=0.5)
        assert f.at_zero() == pytest.approx(f.value(0.0), rel=1e-14)
        assert f.theta == k.theta

    def test_radius_bounds_relative_size(self):
        k = ThetaHeatKernel.from_theta(1.0)
        f = HeatKernelFunction(kernel=k, t=0.3)
        assert f.value(f.radius) < 1e-16 * f.value(0.0)

    def test_second_derivative(self):
        f = HeatKernelFunction(kernel=ThetaHeatKernel.from_theta(2.0), t=1.0)
        x = np.array([-1.2, -0.4, 0.6, 1.5])
        np.testing.assert_allclose(f.d2(x), central_d2(f, x), atol=1e-6)
