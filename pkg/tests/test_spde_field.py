"""Tests for the θ-heat field driven at the origin."""

from __future__ import annotations

import numpy as np
import pytest
from pydantic import ValidationError

from svepath.coefficients import get_fixture
from svepath.config import read_key_values
from svepath.exceptions import ParameterError, TruncationError
from svepath.kernels import PowerLawKernel
from svepath.spde_field import (
    InitialCondition,
    check_trace_identity,
    field_evaluate,
    field_tail_radius,
    initial_trace,
    pairing_grid,
    pairing_series,
    solve_field,
    solve_trace,
    weak_form_residual,
    weak_form_residuals,
    weighted_moment,
    write_field_snapshot,
    zero_forcing_error_table,
)
from svepath.sve_engine import euler_solve
from svepath.testing import make_bump, make_driver, make_ensemble, make_kernel, make_quadratic_bump
from svepath.theta_kernel import ThetaHeatKernel
from svepath.types.core import SpatialGrid


class TestInitialCondition:
    """Constant or function initial fields."""

    def test_constant(self):
        x0 = InitialCondition.constant(2.5)
        assert x0.is_constant
        assert x0(0.3) == 2.5
        assert x0(np.zeros(4)).shape == (4,)

    def test_function(self):
        x0 = InitialCondition.function(np.cos, name="cos")
        assert not x0.is_constant
        assert x0(0.0) == 1.0

    def test_exactly_one_source(self):
        with pytest.raises(ValidationError, match="exactly one"):
            InitialCondition()
        with pytest.raises(ValidationError, match="exactly one"):
            InitialCondition(value=1.0, func=np.cos)


class TestInitialTrace:
    """(S^θ_t X₀)(0)."""

    def test_constant_is_exact(self):
        k = make_kernel()
        grid = SpatialGrid.uniform(-1.0, 1.0, 11)
        assert initial_trace(k, 3.0, 0.7, grid) == 3.0

    def test_time_zero(self):
        k = make_kernel()
        x0 = InitialCondition.function(lambda x: 2.0 + x)
        assert initial_trace(k, x0, 0.0, SpatialGrid.for_kernel(k.theta, 1.0)) == 2.0

    def test_odd_field_averages_to_zero(self):
        k = make_kernel()
        x0 = InitialCondition.function(np.sin)
        value = initial_trace(k, x0, 0.5, SpatialGrid.for_kernel(k.theta, 1.0))
        assert abs(value) < 1e-12

    def test_smooth_field(self):
        """A constant given as a function goes through the quadrature and comes back."""
        k = make_kernel()
        x0 = InitialCondition.function(lambda x: np.full_like(x, 1.5))
        value = initial_trace(k, x0, 0.5, SpatialGrid.for_kernel(k.theta, 1.0))
        assert value == pytest.approx(1.5, abs=1e-6)

    def test_narrow_grid_is_refused(self):
        k = make_kernel()
        x0 = InitialCondition.function(np.cos)
        with pytest.raises(TruncationError, match="truncates"):
            initial_trace(k, x0, 1.0, SpatialGrid.uniform(-0.2, 0.2, 41))

    def test_negative_time(self):
        with pytest.raises(ParameterError, match="non-negative"):
            initial_trace(make_kernel(), 1.0, -0.1, SpatialGrid.uniform(-1.0, 1.0, 11))


class TestTrace:
    """X_t(0) is the power-law SVE."""

    @pytest.mark.parametrize("theta", [0.5, 1.0, 2.0, 4.0])
    def test_trace_identity(self, theta):
        assert check_trace_identity(ThetaHeatKernel.from_theta(theta), make_driver().grid) <= 1e-12

    def test_constant_initial_field_reduces_bitwise(self):
        k = make_kernel()
        driver = make_driver()
        coeffs = get_fixture("holder")
        trace = solve_trace(k, coeffs, driver, 1.0)
        direct = euler_solve(PowerLawKernel(alpha=k.alpha), coeffs, driver, 1.0)
        np.testing.assert_array_equal(trace.values, direct.values)

    def test_ensemble(self):
        k = make_kernel()
        driver = make_ensemble(n=16, paths=3)
        trace = solve_trace(k, get_fixture("lipschitz"), driver, 0.5)
        assert trace.values.shape == (3, 17)

    def test_nonconstant_initial_field_sets_the_curve(self):
        """With zero coefficients the trace is the semigroup at 0."""
        k = make_kernel()
        driver = make_driver(n=8)
        x0 = InitialCondition.function(lambda x: np.exp(-x * x))
        trace = solve_trace(k, get_fixture("zero"), driver, x0)
        assert trace.values[0] == 1.0
        assert np.all(np.diff(trace.values) < 0)


class TestFieldEvaluate:
    """X_t(x) off the origin."""

    def test_initial_time(self):
        sol = solve_field(make_kernel(), get_fixture("lipschitz"), make_driver(n=16), 2.0)
        np.testing.assert_array_equal(field_evaluate(sol, 0.0, np.array([-1.0, 0.0, 3.0])), 2.0)

    def test_matches_trace_without_drift(self):
        """b = 0: the gained noise sum at x = 0 is the trace."""
        driver = make_driver(n=32)
        sol = solve_field(make_kernel(), get_fixture("brownian"), driver, 1.0)
        at_zero = [field_evaluate(sol, float(t), 0.0) for t in driver.grid.nodes]
        np.testing.assert_allclose(at_zero, sol.trace.values, rtol=1e-10, atol=1e-12)

    def test_even_in_x(self):
        sol = solve_field(make_kernel(), get_fixture("lipschitz"), make_driver(n=16), 1.0)
        assert field_evaluate(sol, 0.5, 0.3) == field_evaluate(sol, 0.5, -0.3)

    def test_decays_to_initial_value(self):
        """Far from 0 the forcing is invisible and X_t(x) ≈ X₀."""
        k = make_kernel()
        sol = solve_field(k, get_fixture("lipschitz"), make_driver(n=16), 1.0)
        far = 2.0 * field_tail_radius(k, 1.0)
        assert field_evaluate(sol, 1.0, far) == pytest.approx(1.0, abs=1e-12)

    def test_shapes(self):
        driver = make_ensemble(n=8, paths=2)
        sol = solve_field(make_kernel(), get_fixture("lipschitz"), driver, 1.0)
        assert field_evaluate(sol, 0.5, np.zeros((3, 4))).shape == (2, 3, 4)

    def test_off_node(self):
        sol = solve_field(make_kernel(), get_fixture("lipschitz"), make_driver(n=8), 1.0)
        with pytest.raises(ParameterError, match="not a node"):
            field_evaluate(sol, 0.3, 0.0)

    def test_snapshot(self, tmp_path):
        sol = solve_field(make_kernel(), get_fixture("lipschitz"), make_driver(n=8), 1.0)
        csv_path, meta = write_field_snapshot(sol, 1.0, np.linspace(-1, 1, 5), tmp_path / "f.csv")
        lines = csv_path.read_text().splitlines()
        assert lines[0] == "x,value"
        assert len(lines) == 6
        sidecar = read_key_values(meta)
        assert float(sidecar["t"]) == 1.0
        assert sidecar["fixture"] == "lipschitz"

    def test_snapshot_needs_single_path(self, tmp_path):
        driver = make_ensemble(n=8, paths=2)
        sol = solve_field(make_kernel(), get_fixture("lipschitz"), driver, 1.0)
        with pytest.raises(ParameterError, match="single-path"):
            write_field_snapshot(sol, 1.0, [0.0], tmp_path / "f.csv")


class TestPairings:
    """⟨X_t, φ⟩ and the weak formulation."""

    def test_residual_starts_at_zero(self):
        driver = make_ensemble(n=16, paths=2)
        sol = solve_field(make_kernel(), get_fixture("lipschitz"), driver, 1.0)
        residuals = weak_form_residuals(sol, make_bump())
        assert residuals.shape == (2, 17)
        np.testing.assert_array_equal(residuals[:, 0], 0.0)
        assert np.all(np.isfinite(residuals))

    def test_zero_forcing_is_stationary(self):
        """X ≡ 1 with zero coefficients: the residual is t·∫Δ_θφ, zero for the θ-bump."""
        sol = solve_field(make_kernel(), get_fixture("zero"), make_driver(n=16), 1.0)
        assert np.max(np.abs(weak_form_residuals(sol, make_bump()))) < 1e-10

    def test_pairing_at_time_zero(self):
        sol = solve_field(make_kernel(), get_fixture("lipschitz"), make_driver(n=8), 2.0)
        bump = make_bump()
        grid = pairing_grid(bump)
        series = pairing_series(sol, bump)
        expected = 2.0 * float(np.sum(grid.weights * bump.value(grid.points)))
        assert series.values[0] == pytest.approx(expected, rel=1e-14)
        assert series.phi_at_zero == bump.value(0.0)

    def test_single_path_result(self):
        sol = solve_field(make_kernel(), get_fixture("lipschitz"), make_driver(n=16), 1.0)
        result = weak_form_residual(sol, make_bump(), 0.5)
        assert not result.truncated
        assert result.metadata["node"] == 8
        assert np.isfinite(result.value)

    def test_single_path_required(self):
        driver = make_ensemble(n=8, paths=2)
        sol = solve_field(make_kernel(), get_fixture("lipschitz"), driver, 1.0)
        with pytest.raises(ParameterError, match="single-path"):
            weak_form_residual(sol, make_bump(), 0.5)

    def test_mismatched_theta(self):
        sol = solve_field(make_kernel(), get_fixture("lipschitz"), make_driver(n=8), 1.0)
        with pytest.raises(ParameterError, match="built for theta"):
            pairing_series(sol, make_bump(theta=1.0))

    def test_quadratic_bump_accepted(self):
        sol = solve_field(make_kernel(), get_fixture("lipschitz"), make_driver(n=8), 1.0)
        series = pairing_series(sol, make_quadratic_bump())
        assert np.all(np.isfinite(series.drift_pairings))

    @pytest.mark.slow
    def test_residual_shrinks_under_refinement(self):
        """Lipschitz pair, θ = 2: mean |R_T| falls as the time and space grids refine together."""
        fine = make_ensemble(n=128, paths=16)
        bump = make_bump()
        means = []
        for n, cells in ((32, 1024), (64, 2048), (128, 4096)):
            sol = solve_field(make_kernel(), get_fixture("lipschitz"), fine.coarsen(128 // n), 1.0)
            residual = weak_form_residuals(sol, bump, pairing_grid(bump, cells))[:, -1]
            means.append(float(np.mean(np.abs(residual))))
        assert means[0] > means[1] > means[2]


class TestDiagnostics:
    """Weighted moments and the zero-forcing table."""

    def test_weighted_moment_of_constant_field(self):
        sol = solve_field(make_kernel(), get_fixture("zero"), make_ensemble(n=8, paths=4), 2.0)
        assert weighted_moment(sol, 2.0, 0.0, [0.0, 1.0], 1.0) == pytest.approx(4.0)
        assert weighted_moment(sol, 2.0, 1.0, [1.0, 2.0], 1.0) == pytest.approx(4.0 * np.exp(-1.0))

    def test_weighted_moment_arguments(self):
        sol = solve_field(make_kernel(), get_fixture("zero"), make_driver(n=8), 1.0)
        with pytest.raises(ParameterError):
            weighted_moment(sol, 0.0, 0.0, [0.0], 1.0)

    def test_zero_forcing_table(self):
        rows = zero_forcing_error_table([2.0], cell_counts=(1024,), n=8)
        assert [(theta, family, cells) for theta, family, cells, _ in rows] == [
            (2.0, "theta_bump", 1024),
            (2.0, "quadratic_bump", 1024),
        ]
        assert rows[0][3] < 1e-10
