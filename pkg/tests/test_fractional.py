"""Tests for the fractional transform pair."""

from __future__ import annotations

import logging
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from svepath.exceptions import DomainError
from svepath.fractional import (
    c_alpha,
    forward_weights,
    frac_forward,
    frac_inverse,
    inverse_weights,
)
from svepath.testing import make_grid
from svepath.types.core import SamplePath


class TestCAlpha:
    """c_α = π / sin(πα)."""

    def test_half(self):
        assert c_alpha(0.5) == pytest.approx(math.pi, rel=1e-15)

    @pytest.mark.parametrize("alpha", [0.05, 0.25, 0.45, 0.8])
    def test_quadrature_agrees(self, alpha):
        assert c_alpha(alpha, "quadrature") == pytest.approx(c_alpha(alpha), rel=1e-10)

    def test_symmetric(self):
        assert c_alpha(0.3) == pytest.approx(c_alpha(0.7), rel=1e-14)

    def test_domain(self):
        with pytest.raises(DomainError, match="alpha must lie in"):
            c_alpha(1.0)
        with pytest.raises(DomainError, match="unknown method"):
            c_alpha(0.3, "simpson")  # type: ignore[arg-type]


class TestForward:
    """Y_t = ∫_0^t (t - s)^{α-1} U_s ds."""

    def test_constant_integrates_exactly(self):
        """U ≡ 1 gives Y_t = t^α/α at every node."""
        grid = make_grid(n=50, horizon=2.0)
        y = frac_forward(0.25, SamplePath(grid=grid, values=np.ones(51)))
        np.testing.assert_allclose(y.values, grid.nodes**0.25 / 0.25, rtol=1e-12, atol=1e-15)

    def test_weights_positive_and_decreasing(self):
        a = forward_weights(0.3, make_grid(n=20))
        assert np.all(a > 0)
        assert np.all(np.diff(a) < 0)

    def test_ensemble(self):
        grid = make_grid(n=8)
        y = frac_forward(0.25, SamplePath(grid=grid, values=np.ones((3, 9))))
        assert y.values.shape == (3, 9)
        np.testing.assert_array_equal(y.values[0], y.values[2])

    def test_alpha_range(self):
        grid = make_grid(n=4)
        with pytest.raises(DomainError):
            frac_forward(0.5, SamplePath(grid=grid, values=np.ones(5)))


class TestInverse:
    """U_t = (1/c_α) d/dt ∫_0^t (t - s)^{-α} Y_s ds."""

    @pytest.mark.parametrize("alpha", [0.1, 0.25, 0.4])
    def test_consistent_scheme_inverts_forward(self, alpha):
        grid = make_grid(n=200)
        u = SamplePath(grid=grid, values=1.0 + np.sin(3.0 * grid.nodes))
        back = frac_inverse(alpha, frac_forward(alpha, u))
        np.testing.assert_allclose(back.values[:-1], u.values[:-1], rtol=1e-8, atol=1e-10)
        assert back.values[-1] == back.values[-2]

    def test_cell_scheme_approaches_consistent(self):
        """The two weight sequences agree at rate O(1/k) far from the diagonal."""
        grid = make_grid(n=1024)
        consistent = inverse_weights(0.25, grid)
        cell = inverse_weights(0.25, grid, "cell")
        assert cell[0] == 0.0
        assert abs(consistent[-1] / cell[-1] - 1.0) < 1e-2
        assert abs(consistent[-1] / cell[-1] - 1.0) < abs(consistent[1] / cell[1] - 1.0)

    def test_nonzero_start_is_logged(self, caplog):
        grid = make_grid(n=16)
        y = SamplePath(grid=grid, values=np.ones(17))
        with caplog.at_level(logging.WARNING, logger="svepath.fractional"):
            frac_inverse(0.25, y)
        assert "is not zero" in caplog.text

    def test_unknown_scheme(self):
        with pytest.raises(DomainError, match="unknown scheme"):
            inverse_weights(0.25, make_grid(n=4), "spline")  # type: ignore[arg-type]

    def test_power_maps_to_one(self):
        """Y_t = t^α/α inverts to U ≡ 1 at every node."""
        grid = make_grid(n=100)
        y = SamplePath(grid=grid, values=grid.nodes**0.3 / 0.3)
        np.testing.assert_allclose(frac_inverse(0.3, y).values, 1.0, rtol=1e-8)

    def test_round_trip_error_shrinks(self):
        """Inverting the exact Y of U = 1 + sin t: sup error ≤ 0.05 and falls with n."""
        alpha, fine = 0.25, 2000
        nodes = make_grid(n=fine).nodes
        exact_y = np.array(
            [0.0]
            + [
                integrate.quad(
                    lambda s: 1.0 + math.sin(s), 0.0, t, weight="alg", wvar=(0.0, alpha - 1.0)
                )[0]
                for t in nodes[1:]
            ]
        )
        errors = []
        for n in (500, 1000, 2000):
            grid = make_grid(n=n)
            y = SamplePath(grid=grid, values=exact_y[:: fine // n])
            u = frac_inverse(alpha, y).values
            target = 1.0 + np.sin(grid.nodes)
            errors.append(float(np.max(np.abs(u - target)) / np.max(np.abs(target))))
        assert errors[-1] <= 0.05
        assert errors[0] > errors[1] > errors[2]


class TestLinearity:
    """Both transforms are linear in the path."""

    @given(
        a=st.floats(min_value=-5.0, max_value=5.0),
        b=st.floats(min_value=-5.0, max_value=5.0),
        seed=st.integers(min_value=0, max_value=2**16),
    )
    @settings(max_examples=25, deadline=None)
    def test_superposition(self, a, b, seed):
        grid = make_grid(n=32)
        rng = np.random.default_rng(seed)
        first, second = rng.normal(size=(2, 33))
        first[0] = second[0] = 0.0
        combined = SamplePath(grid=grid, values=a * first + b * second)
        for transform in (frac_forward, frac_inverse):
            lhs = transform(0.25, combined).values
            rhs = a * transform(0.25, SamplePath(grid=grid, values=first)).values + b * (
                transform(0.25, SamplePath(grid=grid, values=second)).values
            )
            np.testing.assert_allclose(lhs, rhs, rtol=1e-9, atol=1e-9)
