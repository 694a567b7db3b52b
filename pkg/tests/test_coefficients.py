"""Tests for coefficient fixtures, scaling and mollification."""

from __future__ import annotations

import numpy as np
import pytest
from pydantic import ValidationError

from svepath.coefficients import (
    CoefficientPair,
    HolderCoefficient,
    get_fixture,
    mollify,
    mollify_pair,
    scale_coefficients,
    standard_examples,
)
from svepath.exceptions import ParameterError, UnknownFixtureError


def _square_root(t, x):
    return np.sqrt(np.abs(x))


class TestFixtures:
    """The standard coefficient pairs."""

    def test_names(self):
        names = [pair.name for pair in standard_examples()]
        assert names == ["lipschitz", "holder", "degenerate", "brownian", "zero", "drift_only"]

    def test_lipschitz_values(self):
        pair = get_fixture("lipschitz")
        np.testing.assert_array_equal(pair.b(0.3, np.array([-1.0, 2.0])), [1.0, -2.0])
        assert pair.sigma(0.3, 5.0) == 1.0
        assert pair.is_lipschitz

    def test_holder_pair_is_not_lipschitz(self):
        pair = get_fixture("holder")
        assert not pair.is_lipschitz
        assert pair.sigma.gamma == 0.5
        assert pair.b(0.0, 4.0) == pytest.approx(-2.0)

    def test_scalar_in_scalar_out(self):
        pair = get_fixture("zero")
        assert isinstance(pair.b(0.0, 1.0), float)
        assert pair.sigma(0.0, np.zeros(3)).shape == (3,)

    def test_unknown_fixture(self):
        with pytest.raises(UnknownFixtureError) as excinfo:
            get_fixture("cubic")
        assert "lipschitz" in str(excinfo.value)
        assert isinstance(excinfo.value, ParameterError)


class TestCoefficientPair:
    """Regularity metadata enforced at construction."""

    def test_rough_diffusion_rejected(self):
        rough = HolderCoefficient(func=_square_root, gamma=0.4, lipschitz=1.0)
        with pytest.raises(ValidationError, match=">= 1/2"):
            CoefficientPair(name="rough", b=get_fixture("lipschitz").b, sigma=rough)

    def test_increasing_drift_needs_opt_out(self):
        up = HolderCoefficient(func=lambda t, x: x, gamma=1.0, lipschitz=1.0, name="x")
        sigma = get_fixture("lipschitz").sigma
        with pytest.raises(ValidationError, match="requires a monotone drift"):
            CoefficientPair(name="growing", b=up, sigma=sigma)
        pair = CoefficientPair(name="growing", b=up, sigma=sigma, monotone_drift=False)
        assert not pair.monotone_drift


class TestScaling:
    """factor·(b, σ)."""

    def test_values_and_constants(self):
        pair = scale_coefficients(get_fixture("holder"), 2.0)
        base = get_fixture("holder")
        x = np.array([-3.0, 0.5, 7.0])
        np.testing.assert_array_equal(pair.b(0.1, x), 2.0 * base.b(0.1, x))
        np.testing.assert_array_equal(pair.sigma(0.1, x), 2.0 * base.sigma(0.1, x))
        assert pair.b.lipschitz == pytest.approx(2.0 * base.b.lipschitz)
        assert pair.name == "2*holder"

    def test_unit_factor_is_bitwise(self):
        x = np.linspace(-5.0, 5.0, 101)
        pair = scale_coefficients(get_fixture("lipschitz"), 1.0)
        np.testing.assert_array_equal(pair.b(0.0, x), get_fixture("lipschitz").b(0.0, x))

    def test_non_positive_factor(self):
        with pytest.raises(ParameterError, match="positive"):
            scale_coefficients(get_fixture("lipschitz"), 0.0)


class TestMollify:
    """Lattice mollification f^m."""

    @pytest.mark.parametrize("m", [1, 4, 16])
    def test_uniform_approximation(self, m):
        """sup|f^m - f| ≤ L m^{-γ} for the square-root drift."""
        f = get_fixture("holder").b
        x = np.linspace(-6.0, 6.0, 2001)
        gap = np.max(np.abs(mollify(f, m)(0.0, x) - f(0.0, x)))
        assert gap <= f.lipschitz * m**-f.gamma

    def test_constants_reproduced(self):
        one = get_fixture("lipschitz").sigma
        x = np.linspace(-3.0, 3.0, 41)
        np.testing.assert_allclose(mollify(one, 3)(0.0, x), 1.0, rtol=1e-14)

    def test_monotone_drift_stays_monotone(self):
        f = mollify(get_fixture("holder").b, 8)
        assert f.decreasing_in_x
        values = f(0.0, np.linspace(-4.0, 4.0, 4001))
        assert np.all(np.diff(values) <= 1e-12)

    def test_result_is_lipschitz(self):
        f = mollify(get_fixture("holder").b, 4)
        assert f.gamma == 1.0
        assert f.lipschitz >= get_fixture("holder").b.lipschitz
        assert f.name.endswith("^4")

    def test_pair(self):
        pair = mollify_pair(get_fixture("holder"), 2)
        assert pair.is_lipschitz
        assert pair.name == "holder^2"

    def test_index_must_be_positive(self):
        with pytest.raises(ParameterError, match=">= 1"):
            mollify(get_fixture("holder").b, 0)
