"""Tests for candidate fields, additive functionals and residual reports."""

from __future__ import annotations

import logging

import numpy as np
import pytest

from svepath.coefficients import get_fixture, scale_coefficients
from svepath.exceptions import ParameterError
from svepath.fbm_kernels import FbmParams
from svepath.kernels import PowerLawKernel
from svepath.path_independence import (
    CandidateV,
    candidate_fixtures,
    constant_functional,
    default_probes,
    derive_g_from_v,
    dyadic_pairs,
    fbm_verify,
    get_candidate,
    ito_functional,
    psi_limit_study,
    psi_m,
    residual_scan,
    verify_field_path_independence,
    verify_path_independence,
)
from svepath.spde_field import solve_field, weak_form_residuals
from svepath.sve_engine import euler_solve
from svepath.testing import (
    make_bump,
    make_driver,
    make_ensemble,
    make_grid,
    make_kernel,
    make_quadratic_bump,
)
from svepath.utils.csv_io import read_records

KERNEL = PowerLawKernel(alpha=0.25)


class TestCandidates:
    """v(t, z) fixtures."""

    def test_names(self):
        assert sorted(candidate_fixtures()) == ["constant", "damped_sine", "identity"]

    def test_boundedness(self):
        assert get_candidate("damped_sine").bounded
        assert get_candidate("constant").bounded
        assert not get_candidate("identity").bounded

    def test_broadcasting(self):
        v = CandidateV.identity()
        assert v.v(0.5, np.array([1.0, 2.0])).shape == (2,)
        assert v.dz_v(np.array([0.1, 0.2, 0.3]), 4.0).shape == (3,)

    def test_unknown(self):
        with pytest.raises(ParameterError, match="unknown candidate"):
            get_candidate("cosine")


class TestItoFunctional:
    """Left-point sums Σ g₁ Δt + g₂ ΔB."""

    def test_time_integral(self):
        driver = make_driver(n=16)
        path = euler_solve(KERNEL, get_fixture("lipschitz"), driver, 1.0)
        af = constant_functional(1.0, 0.0)
        assert ito_functional(af, path, driver, 0.25, 0.75) == pytest.approx(0.5)

    def test_noise_integral(self):
        driver = make_driver(n=16)
        path = euler_solve(KERNEL, get_fixture("lipschitz"), driver, 1.0)
        brownian = driver.brownian_path
        value = ito_functional(constant_functional(0.0, 1.0), path, driver, 0.25, 1.0)
        assert value == pytest.approx(brownian[16] - brownian[4], abs=1e-14)

    def test_ensemble(self):
        driver = make_ensemble(n=8, paths=3)
        path = euler_solve(KERNEL, get_fixture("lipschitz"), driver, 1.0)
        value = ito_functional(constant_functional(0.0, 1.0), path, driver, 0.0, 1.0)
        np.testing.assert_allclose(value, driver.increments.sum(axis=-1), atol=1e-14)

    def test_order_and_grid_checked(self):
        driver = make_driver(n=8)
        path = euler_solve(KERNEL, get_fixture("lipschitz"), driver, 1.0)
        with pytest.raises(ParameterError, match="s < t"):
            ito_functional(constant_functional(1.0, 0.0), path, driver, 0.5, 0.5)
        with pytest.raises(ParameterError, match="share the time grid"):
            ito_functional(constant_functional(1.0, 0.0), path, make_driver(n=16), 0.0, 0.5)

    def test_c_theta_checked(self):
        with pytest.raises(ParameterError, match="c_theta"):
            derive_g_from_v(get_candidate("identity"), get_fixture("lipschitz"), 0.0)


class TestResidualScan:
    """Defects of the path-independence equations."""

    def test_derived_pair_has_zero_defect(self):
        driver = make_driver(n=32)
        for pair in ("lipschitz", "holder", "degenerate"):
            report = verify_path_independence(
                KERNEL, get_candidate("damped_sine"), get_fixture(pair), driver, zprobes=9
            )
            assert report.max_residual() == 0.0

    def test_perturbation_shows_in_defect(self):
        driver = make_driver(n=16)
        path = euler_solve(KERNEL, get_fixture("lipschitz"), driver, 1.0)
        v = get_candidate("damped_sine")
        af = derive_g_from_v(v, get_fixture("lipschitz"), 0.5).perturbed(eps1=0.1, eps2=-0.2)
        report = residual_scan(v, af, get_fixture("lipschitz"), 0.5, path, zprobes=5)
        np.testing.assert_allclose(report.residual1, -0.1, atol=1e-14)
        np.testing.assert_allclose(report.residual2, 0.2, atol=1e-14)

    def test_report_layout(self, tmp_path):
        driver = make_ensemble(n=16, paths=4)
        report = verify_path_independence(
            KERNEL, get_candidate("damped_sine"), get_fixture("lipschitz"), driver, zprobes=5
        )
        assert report.residual1.shape == (17, 5)
        assert report.pairs == dyadic_pairs(driver.grid)
        assert report.pathwise_gap.shape == (4, len(report.pairs))
        assert report.median_gaps().shape == (len(report.pairs),)
        summary = report.summary()
        assert summary.splitlines()[1].startswith("max_residual = ")
        assert "median_pathwise_gap" in summary
        header, rows = read_records(report.to_csv(tmp_path / "report.csv"))
        assert header == ["kind", "r", "z", "value"]
        assert len(rows) == 2 * 17 * 5 + len(report.pairs)

    def test_explicit_probes_and_pairs(self):
        driver = make_driver(n=8)
        report = verify_path_independence(
            KERNEL,
            get_candidate("identity"),
            get_fixture("lipschitz"),
            driver,
            zprobes=[-1.0, 0.0, 1.0],
            pairs=[(0.0, 1.0)],
        )
        np.testing.assert_array_equal(report.z, [-1.0, 0.0, 1.0])
        assert report.pairs == [(0.0, 1.0)]

    def test_probe_count_checked(self):
        driver = make_driver(n=8)
        with pytest.raises(ParameterError, match="at least 2"):
            verify_path_independence(
                KERNEL, get_candidate("identity"), get_fixture("lipschitz"), driver, zprobes=1
            )

    def test_refinement_rows_in_summary(self):
        report = verify_path_independence(
            KERNEL, get_candidate("identity"), get_fixture("lipschitz"), make_driver(n=8)
        ).with_refinement([(8, 0.5), (16, 0.25)])
        assert "refinement (n, median gap):" in report.summary()


class TestProbesAndPairs:
    """Probe grids and dyadic pairs."""

    def test_default_probes_widen_range(self):
        z = default_probes(np.array([0.0, 1.0]))
        assert z.size == 41
        assert z[0] == pytest.approx(-0.1)
        assert z[-1] == pytest.approx(1.1)

    def test_flat_values(self):
        z = default_probes(np.full(5, 2.0), count=3)
        np.testing.assert_allclose(z, [1.9, 2.0, 2.1])

    def test_dyadic_pairs(self):
        assert dyadic_pairs(make_grid(n=64)) == [
            (0.125, 0.25),
            (0.125, 0.5),
            (0.125, 1.0),
            (0.25, 0.5),
            (0.25, 1.0),
            (0.5, 1.0),
        ]
        assert len(dyadic_pairs(make_grid(n=12))) == 3
        assert dyadic_pairs(make_grid(n=3)) == [(0.0, 1.0)]


class TestFbmVerify:
    """The fBm equation runs through the power-law pipeline."""

    def test_unit_constant_is_the_power_law(self):
        driver = make_driver(n=32)
        v = get_candidate("damped_sine")
        coeffs = get_fixture("holder")
        fbm = fbm_verify(FbmParams(H=0.25), v, coeffs, driver, zprobes=7)
        plain = verify_path_independence(KERNEL, v, coeffs, driver, zprobes=7)
        np.testing.assert_array_equal(fbm.pathwise_gap, plain.pathwise_gap)
        np.testing.assert_array_equal(fbm.residual1, plain.residual1)

    def test_constant_is_absorbed(self):
        driver = make_driver(n=32)
        v = get_candidate("damped_sine")
        coeffs = get_fixture("lipschitz")
        fbm = fbm_verify(FbmParams(H=0.25, C=2.0), v, coeffs, driver, zprobes=7)
        absorbed = verify_path_independence(
            KERNEL, v, scale_coefficients(coeffs, 2.0), driver, zprobes=7
        )
        np.testing.assert_array_equal(fbm.pathwise_gap, absorbed.pathwise_gap)


class TestFieldPathIndependence:
    """Pairings Z_r = a(r)⟨X_r, φ⟩ against V."""

    def test_constant_candidate_has_no_gap(self):
        driver = make_ensemble(n=16, paths=2)
        sol = solve_field(make_kernel(), get_fixture("lipschitz"), driver, 1.0)
        report = verify_field_path_independence(CandidateV.constant(), make_bump(), sol, zprobes=5)
        assert np.all(report.pathwise_gap == 0.0)
        assert report.max_residual() == 0.0

    def test_identity_gap_is_weak_form_increment(self):
        """For V(z) = z the gap over [s, t] is |R_t - R_s|."""
        sol = solve_field(make_kernel(), get_fixture("lipschitz"), make_driver(n=16), 1.0)
        bump = make_bump()
        report = verify_field_path_independence(
            CandidateV.identity(), bump, sol, pairs=[(0.25, 0.75)], zprobes=5
        )
        residuals = weak_form_residuals(sol, bump)
        expected = abs(residuals[12] - residuals[4])
        assert float(report.pathwise_gap[0]) == pytest.approx(expected, rel=1e-8, abs=1e-12)

    def test_zero_forcing_identity_gap(self):
        sol = solve_field(make_kernel(), get_fixture("zero"), make_driver(n=16), 1.0)
        report = verify_field_path_independence(CandidateV.identity(), make_bump(), sol, zprobes=5)
        assert float(np.max(report.pathwise_gap)) < 1e-10

    def test_shifted_second_equation(self):
        sol = solve_field(make_kernel(), get_fixture("lipschitz"), make_driver(n=8), 1.0)
        v = get_candidate("damped_sine")
        plain = verify_field_path_independence(v, make_bump(), sol, zprobes=5)
        report = verify_field_path_independence(v, make_bump(), sol, g2_shift=0.3, zprobes=5)
        np.testing.assert_allclose(report.residual2, -0.3, atol=1e-14)
        np.testing.assert_array_equal(plain.residual2, 0.0)
        np.testing.assert_array_equal(report.residual1, plain.residual1)

    def test_first_defect_is_weak_form_rate(self):
        """For V(z) = z the first defect at node j is (R_{j+1} - R_j)/Δt for every z."""
        sol = solve_field(make_kernel(), get_fixture("lipschitz"), make_driver(n=16), 1.0)
        bump = make_bump()
        report = verify_field_path_independence(CandidateV.identity(), bump, sol, zprobes=5)
        rate = np.diff(weak_form_residuals(sol, bump)) / sol.grid.dt
        assert report.residual1.shape == (16, 5)
        np.testing.assert_allclose(
            report.residual1, np.repeat(rate[:, None], 5, axis=1), rtol=1e-8, atol=1e-10
        )
        assert np.max(np.abs(report.residual1)) > 0.0

    def test_modulation(self):
        sol = solve_field(make_kernel(), get_fixture("lipschitz"), make_driver(n=8), 1.0)
        report = verify_field_path_independence(
            CandidateV.constant(),
            make_bump(),
            sol,
            modulation=(lambda t: np.exp(-t), lambda t: -np.exp(-t)),
            zprobes=5,
        )
        assert np.all(report.pathwise_gap == 0.0)

    def test_degenerate_pairing_warns(self, caplog):
        sol = solve_field(make_kernel(), get_fixture("lipschitz"), make_driver(n=8), 1.0)
        phi = make_quadratic_bump(c=1.0, center=3.0)
        with caplog.at_level(logging.WARNING, logger="svepath.path_independence"):
            verify_field_path_independence(get_candidate("identity"), phi, sol, zprobes=5)
        assert "carries no noise" in caplog.text


class TestPsiLimit:
    """ψ^m = p_{m^{-1/α}} concentrating at 0."""

    def test_value_at_zero_grows_linearly(self):
        k = make_kernel()
        for m in (1, 4, 16):
            assert psi_m(k, m).at_zero() / k.c_theta == pytest.approx(m, rel=1e-12)

    def test_index_checked(self):
        with pytest.raises(ParameterError, match="m must be >= 1"):
            psi_m(make_kernel(), 0)

    def test_study_rows(self):
        driver = make_ensemble(n=16, paths=2)
        sol = solve_field(make_kernel(), get_fixture("lipschitz"), driver, 1.0)
        rows = psi_limit_study(get_candidate("damped_sine"), sol, [1, 2])
        assert [row[0] for row in rows] == [1, 2]
        assert rows[1][1] == pytest.approx(2.0)
        assert all(np.isfinite(row[2]) and row[3] >= row[2] for row in rows)


@pytest.mark.slow
class TestFieldRefinement:
    """The field-level gap shrinks under refinement unless the second equation is broken."""

    def test_gap_decreases_and_shift_does_not(self):
        fine = make_ensemble(n=1024, paths=64)
        k = make_kernel()
        bump = make_bump()
        v = get_candidate("damped_sine")
        medians = []
        for factor in (4, 2, 1):
            sol = solve_field(k, get_fixture("lipschitz"), fine.coarsen(factor), 1.0)
            medians.append(verify_field_path_independence(v, bump, sol).median_gap())
        assert medians[0] > medians[1] > medians[2]
        sol = solve_field(k, get_fixture("lipschitz"), fine, 1.0)
        shifted = verify_field_path_independence(v, bump, sol, g2_shift=0.5).median_gap()
        assert shifted > 2.0 * medians[2]
