from __future__ import annotations

"""Invariant suite run by ``svepath selftest``.

Every check is cheap (seconds in total) and deterministic. A check that raises is recorded as
failed with the exception text, so one broken module does not hide the others.
"""

import logging
import time
from collections.abc import Callable

import numpy as np

from svepath.bumps import HeatKernelFunction, ThetaBump
from svepath.coefficients import get_fixture, mollify, scale_coefficients, standard_examples
from svepath.exceptions import NumericalError, ParameterError
from svepath.experiments import simulate_ensemble
from svepath.fbm_kernels import (
    FbmParams,
    covariance,
    covariance_from_kernel,
    fbm_sample,
    gauss_2f1,
)
from svepath.fractional import c_alpha, frac_forward, frac_inverse
from svepath.kernels.fbm_exact import FbmExactKernel
from svepath.kernels.power_law import PowerLawKernel
from svepath.path_independence import (
    candidate_fixtures,
    fbm_verify,
    get_candidate,
    verify_path_independence,
)
from svepath.spde_field import (
    check_trace_identity,
    solve_field,
    solve_trace,
    weak_form_residuals,
)
from svepath.sve_engine import euler_solve, picard_solve
from svepath.theta_kernel import (
    ThetaHeatKernel,
    c_theta_closed_form,
    compute_c_theta,
    delta_theta_apply,
    heat_kernel_derivatives,
    total_mass,
)
from svepath.types.base import SvepathModel
from svepath.types.core import BrownianDriver, SamplePath, TimeGrid
from svepath.utils.seeding import PATH_CHUNK
from svepath.validation import check_candidate_derivatives, validate_pair

logger = logging.getLogger(__name__)

THETAS = (0.5, 1.0, 2.0, 4.0)


class CheckResult(SvepathModel):
    """Outcome of one invariant check."""

    name: str
    passed: bool
    detail: str = ""
    seconds: float = 0.0


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise NumericalError(message)


def _c_theta() -> str:
    worst = max(
        abs(compute_c_theta(theta) - c_theta_closed_form(theta)) / c_theta_closed_form(theta)
        for theta in THETAS
    )
    _require(worst <= 1e-10, f"c_theta quadrature vs closed form: {worst:.3e}")
    return f"max rel gap {worst:.2e}"


def _mass() -> str:
    worst = 0.0
    for theta in THETAS:
        k = ThetaHeatKernel.from_theta(theta)
        for t in (0.1, 1.0, 10.0):
            worst = max(worst, abs(total_mass(k, t) - 1.0))
    _require(worst <= 1e-8, f"|mass - 1| = {worst:.3e}")
    return f"max |mass - 1| {worst:.2e}"


def _fundamental_solution() -> str:
    rng = np.random.default_rng(11)
    worst = 0.0
    for theta in THETAS:
        k = ThetaHeatKernel.from_theta(theta)
        t = float(rng.uniform(0.1, 2.0))
        x = rng.uniform(0.05, 2.0, 64) * rng.choice([-1.0, 1.0], 64)
        dt = np.asarray(heat_kernel_derivatives(k, t, x).dt)
        lap = np.asarray(delta_theta_apply(theta, HeatKernelFunction(kernel=k, t=t), x))
        scale = 1.0 + np.abs(dt)
        worst = max(worst, float(np.max(np.abs(dt - lap) / scale)))
    _require(worst <= 1e-10, f"∂_t p - Δ_θ p = {worst:.3e}")
    return f"max rel defect {worst:.2e}"


def _trace_identity() -> str:
    grid = TimeGrid(horizon=1.0, n=256)
    worst = max(check_trace_identity(ThetaHeatKernel.from_theta(t), grid) for t in THETAS)
    return f"max rel gap {worst:.2e}"


def _c_alpha() -> str:
    for alpha in (0.1, 0.25, 0.4):
        closed = c_alpha(alpha)
        _require(abs(c_alpha(alpha, "quadrature") - closed) <= 1e-10 * closed, f"alpha={alpha}")
        _require(abs(c_alpha(1.0 - alpha) - closed) <= 1e-12 * closed, f"symmetry at {alpha}")
    return "closed form, quadrature and symmetry agree"


def _frac_round_trip() -> str:
    grid = TimeGrid(horizon=1.0, n=2000)
    u = SamplePath(grid=grid, values=1.0 + np.sin(grid.nodes))
    back = frac_inverse(0.25, frac_forward(0.25, u))
    err = float(np.max(np.abs(back.values - u.values)) / np.max(np.abs(u.values)))
    _require(err <= 0.05, f"relative sup error {err:.3e}")
    return f"relative sup error {err:.2e}"


def _hypergeometric() -> str:
    z = -np.array([0.1, 0.5, 1.0, 3.0, 10.0, 100.0])
    exact = -np.log1p(-z) / z
    got = np.asarray(gauss_2f1(1.0, 1.0, 2.0, z))
    err = float(np.max(np.abs(got - exact) / np.abs(exact)))
    _require(err <= 1e-10, f"2F1(1,1;2;z) rel error {err:.3e}")
    return f"2F1 spot values rel error {err:.2e}"


def _covariance() -> str:
    worst = 0.0
    for H in (0.1, 0.25, 0.4):
        for s, t in ((0.3, 0.7), (0.5, 1.0), (1.0, 1.0)):
            exact = covariance(H, s, t)
            worst = max(worst, abs(covariance_from_kernel(H, s, t) - exact) / abs(exact))
    _require(worst <= 1e-3, f"covariance reconstruction rel error {worst:.3e}")
    return f"max rel error {worst:.2e}"


def _fixtures() -> str:
    pairs = standard_examples()
    for pair in pairs:
        validate_pair(pair, n_probes=200)
    for v in candidate_fixtures().values():
        check_candidate_derivatives(v)
    return f"{len(pairs)} coefficient pairs and {len(candidate_fixtures())} candidates"


def _construction_closure() -> str:
    grid = TimeGrid(horizon=1.0, n=64)
    driver = BrownianDriver.from_seed(5, grid)
    worst = 0.0
    for pair in standard_examples():
        report = verify_path_independence(
            PowerLawKernel(alpha=0.25), get_candidate("damped_sine"), pair, driver
        )
        worst = max(worst, report.max_residual())
    _require(worst <= 1e-12, f"max residual {worst:.3e}")
    return f"max residual {worst:.2e}"


def _trace_reduction() -> str:
    grid = TimeGrid(horizon=1.0, n=128)
    driver = BrownianDriver.from_seed(7, grid)
    coeffs = get_fixture("lipschitz")
    k = ThetaHeatKernel.from_alpha(0.25)
    trace = solve_trace(k, coeffs, driver, 1.0)
    direct = euler_solve(PowerLawKernel(alpha=0.25), coeffs, driver, 1.0)
    _require(np.array_equal(trace.values, direct.values), "trace differs from the SVE solve")
    return "bit-identical"


def _fbm_absorption() -> str:
    grid = TimeGrid(horizon=1.0, n=64)
    driver = BrownianDriver.from_seed(9, grid)
    v = get_candidate("damped_sine")
    coeffs = get_fixture("lipschitz")
    fbm = fbm_verify(FbmParams(H=0.25, C=1.0), v, coeffs, driver)
    plain = verify_path_independence(PowerLawKernel(alpha=0.25), v, coeffs, driver)
    _require(np.array_equal(fbm.pathwise_gap, plain.pathwise_gap), "C = 1 differs from PowerLaw")
    doubled = fbm_verify(FbmParams(H=0.25, C=2.0), v, coeffs, driver)
    absorbed = verify_path_independence(
        PowerLawKernel(alpha=0.25), v, scale_coefficients(coeffs, 2.0), driver
    )
    _require(np.array_equal(doubled.pathwise_gap, absorbed.pathwise_gap), "C = 2 not absorbed")
    return "C = 1 and C = 2 match the power-law pipeline"


def _picard_agreement() -> str:
    grid = TimeGrid(horizon=1.0, n=64)
    driver = BrownianDriver.from_seed(13, grid)
    coeffs = get_fixture("lipschitz")
    kernel = PowerLawKernel(alpha=0.25)
    picard = picard_solve(kernel, coeffs, driver, 1.0)
    euler = euler_solve(kernel, coeffs, driver, 1.0)
    gap = float(np.max(np.abs(picard.path.values - euler.values)))
    _require(gap <= 1e-8, f"Picard limit differs from Euler by {gap:.3e}")
    return f"{picard.iterations} iterations, max gap {gap:.2e}"


def _mollify() -> str:
    x = np.linspace(-3.0, 3.0, 601)
    worst = 0.0
    for pair in standard_examples():
        for f in (pair.b, pair.sigma):
            for m in (4, 16, 64):
                bound = f.lipschitz * m ** (-f.gamma)
                gap = float(np.max(np.abs(mollify(f, m)(0.5, x) - f(0.5, x))))
                _require(gap <= bound + 1e-12, f"{f.name} at m={m}: {gap:.3e} > {bound:.3e}")
                worst = max(worst, gap / bound if bound > 0 else 0.0)
    return f"sup|f^m - f| within L m^-gamma (worst ratio {worst:.2f})"


def _fbm_sample_variance() -> str:
    grid = TimeGrid(horizon=1.0, n=64)
    driver = BrownianDriver.ensemble(17, grid, 2000)
    worst = 0.0
    for H in (0.1, 0.25, 0.4):
        values = fbm_sample(H, grid, driver).values
        weights = FbmExactKernel(H=H).diffusion_weights(grid)
        encoded = float(np.sum(weights[-1] ** 2) * grid.dt)
        exact = covariance(H, 1.0, 1.0)
        worst = max(worst, abs(encoded - exact) / exact)
        sample = values[:, -1] ** 2
        stderr = float(sample.std(ddof=1)) / np.sqrt(sample.size)
        _require(
            abs(float(sample.mean()) - exact) <= 4.0 * stderr,
            f"H={H}: sample variance {float(sample.mean()):.4f} vs R_H {exact:.4f}",
        )
    _require(worst <= 2e-2, f"weights encode variance off by {worst:.3e}")
    return f"encoded variance rel gap {worst:.2e}"


def _weak_form() -> str:
    k = ThetaHeatKernel.from_alpha(0.25)
    bump = ThetaBump(theta=k.theta, c=2.0)
    fine = BrownianDriver.ensemble(19, TimeGrid(horizon=1.0, n=64), 8)
    means = []
    for factor in (2, 1):
        sol = solve_field(k, get_fixture("lipschitz"), fine.coarsen(factor), 1.0)
        means.append(float(np.mean(np.abs(weak_form_residuals(sol, bump)[:, -1]))))
    _require(means[1] < means[0], f"residual does not shrink: {means[0]:.3e} -> {means[1]:.3e}")
    still = solve_field(k, get_fixture("zero"), fine, 1.0)
    drift = float(np.max(np.abs(weak_form_residuals(still, bump))))
    _require(drift <= 1e-10, f"stationary field residual {drift:.3e}")
    return f"mean |R_T| {means[0]:.2e} -> {means[1]:.2e}"


def _seeding() -> str:
    grid = TimeGrid(horizon=1.0, n=16)
    kernel = PowerLawKernel(alpha=0.25)
    coeffs = get_fixture("lipschitz")
    n_paths = 2 * PATH_CHUNK + 3
    serial = simulate_ensemble(kernel, coeffs, grid, n_paths, 23, workers=1)
    threaded = simulate_ensemble(kernel, coeffs, grid, n_paths, 23, workers=4)
    _require(np.array_equal(serial.values, threaded.values), "worker count changes the paths")
    last = euler_solve(kernel, coeffs, BrownianDriver.from_seed(23, grid, n_paths - 1), 1.0)
    _require(np.array_equal(serial.values[-1], last.values), "path k differs from its sub-seed")
    return f"{n_paths} paths identical for 1 and 4 workers"


CHECKS: dict[str, Callable[[], str]] = {
    "c_theta": _c_theta,
    "heat_kernel_mass": _mass,
    "fundamental_solution": _fundamental_solution,
    "trace_identity": _trace_identity,
    "c_alpha": _c_alpha,
    "fractional_round_trip": _frac_round_trip,
    "hypergeometric": _hypergeometric,
    "fbm_covariance": _covariance,
    "fixtures": _fixtures,
    "construction_closure": _construction_closure,
    "trace_reduction": _trace_reduction,
    "fbm_absorption": _fbm_absorption,
    "picard_agreement": _picard_agreement,
    "mollify": _mollify,
    "fbm_sample_variance": _fbm_sample_variance,
    "weak_form": _weak_form,
    "seeding": _seeding,
}


def run_check(name: str, check: Callable[[], str]) -> CheckResult:
    start = time.perf_counter()
    try:
        detail = check()
        passed = True
    except Exception as e:  # noqa: BLE001
        detail = f"{type(e).__name__}: {e}"
        passed = False
    elapsed = time.perf_counter() - start
    if passed:
        logger.info(f"selftest {name}: ok ({detail})")
    else:
        logger.error(f"selftest {name}: FAILED ({detail})")
    return CheckResult(name=name, passed=passed, detail=detail, seconds=elapsed)


def run_selftest(names: list[str] | None = None) -> list[CheckResult]:
    """Run the named checks (all by default) in a fixed order."""
    selected = names if names is not None else list(CHECKS)
    unknown = [name for name in selected if name not in CHECKS]
    if unknown:
        raise ParameterError(
            f"unknown selftest check(s): {', '.join(unknown)}",
            suggestion=f"Available: {', '.join(CHECKS)}",
        )
    return [run_check(name, CHECKS[name]) for name in selected]


def format_results(results: list[CheckResult]) -> str:
    width = max(len(r.name) for r in results) if results else 0
    lines = [
        f"{'ok' if r.passed else 'FAIL':4}  {r.name:{width}}  {r.seconds:6.2f}s  {r.detail}"
        for r in results
    ]
    failed = sum(not r.passed for r in results)
    lines.append(f"{len(results) - failed}/{len(results)} checks passed")
    return "\n".join(lines)


__all__ = ["CHECKS", "CheckResult", "format_results", "run_check", "run_selftest"]
