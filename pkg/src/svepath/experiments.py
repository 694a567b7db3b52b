"""Monte Carlo experiments: moments, Hölder modulus, coupled refinement and path independence.

Paths are simulated in fixed blocks of consecutive path indices (see
:mod:`svepath.utils.seeding`); blocks run on a thread pool and are reassembled in index
order, so every table is independent of the worker count.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Callable, Sequence
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import TypeVar

import numpy as np
from pydantic import Field, model_validator

from svepath.bumps import ThetaBump
from svepath.coefficients import CoefficientPair, get_fixture
from svepath.config import ExperimentConfig, write_sidecar
from svepath.exceptions import MomentWindowError, ParameterError
from svepath.kernels.base import SingularKernel
from svepath.kernels.power_law import FbmSimpleKernel, PowerLawKernel
from svepath.path_independence import (
    ResidualReport,
    fbm_verify,
    get_candidate,
    psi_limit_study,
    verify_field_path_independence,
    verify_path_independence,
)
from svepath.spde_field import InitialCondition, solve_field
from svepath.sve_engine import euler_solve
from svepath.theta_kernel import ThetaHeatKernel
from svepath.types.base import ArrayModel
from svepath.types.core import BrownianDriver, FloatArray, SamplePath, TimeGrid
from svepath.utils.csv_io import write_table
from svepath.utils.seeding import path_chunks

logger = logging.getLogger(__name__)

BATCHES = 16

T = TypeVar("T")


class ResultTable(ArrayModel):
    """Numeric table with named columns and scalar notes (fitted slopes, predictions)."""

    header: list[str]
    rows: np.ndarray
    notes: dict[str, float | str] = Field(default_factory=dict)

    @model_validator(mode="after")
    def _shape(self) -> ResultTable:
        if self.rows.ndim != 2 or self.rows.shape[1] != len(self.header):
            raise ValueError(f"rows of shape {self.rows.shape} do not match header {self.header}")
        return self

    def column(self, name: str) -> FloatArray:
        return np.asarray(self.rows[:, self.header.index(name)])

    def to_csv(self, path: str | Path) -> Path:
        """Write the table; notes go to a ``.meta`` sidecar next to it."""
        written = write_table(path, self.header, [self.rows[:, k] for k in range(len(self.header))])
        if self.notes:
            write_sidecar(Path(path).with_suffix(".meta"), self.notes)
        return written


# ============================================================================
# Path simulation
# ============================================================================


def map_chunks(func: Callable[[range], T], n_paths: int, workers: int = 1) -> list[T]:
    """``func`` on every path block, results in block order."""
    chunks = path_chunks(n_paths)
    if workers <= 1 or len(chunks) == 1:
        return [func(chunk) for chunk in chunks]
    with ThreadPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(func, chunks))


def simulate_ensemble(
    kernel: SingularKernel,
    coeffs: CoefficientPair,
    grid: TimeGrid,
    n_paths: int,
    seed: int,
    x0: float = 1.0,
    workers: int = 1,
) -> SamplePath:
    """``n_paths`` Euler paths; path k is driven by the sub-seeded stream (seed, k)."""

    def solve_chunk(chunk: range) -> FloatArray:
        driver = BrownianDriver.ensemble(seed, grid, len(chunk), first_path=chunk.start)
        return np.asarray(euler_solve(kernel, coeffs, driver, x0).values)

    blocks = map_chunks(solve_chunk, n_paths, workers)
    logger.info(f"simulated {n_paths} paths of {kernel.describe()} / {coeffs.name} (n={grid.n})")
    return SamplePath(grid=grid, values=np.concatenate(blocks, axis=0))


def simulate_config(config: ExperimentConfig) -> SamplePath:
    return simulate_ensemble(
        config.kernel_model,
        get_fixture(config.fixture),
        config.grid,
        config.paths,
        config.seed,
        config.x0,
        config.workers,
    )


def simulate_single(config: ExperimentConfig, path: int = 0) -> SamplePath:
    """Path ``path`` of the ensemble, alone."""
    driver = BrownianDriver.from_seed(config.seed, config.grid, path)
    return euler_solve(config.kernel_model, get_fixture(config.fixture), driver, config.x0)


# ============================================================================
# Estimators
# ============================================================================


def batch_means(samples: FloatArray, batches: int = BATCHES) -> tuple[float, float]:
    """Mean and batch-means standard error over contiguous batches of the first axis."""
    samples = np.asarray(samples, dtype=np.float64)
    mean = float(samples.mean())
    count = min(batches, samples.shape[0])
    if count < 2:
        return mean, float("nan")
    means = np.array([block.mean() for block in np.array_split(samples, count)])
    return mean, float(means.std(ddof=1) / math.sqrt(count))


def log_log_slope(x: Sequence[float], y: Sequence[float], drop_first: bool = False) -> float:
    """Least-squares slope of log y against log x; NaN when fewer than 2 positive points."""
    xs, ys = np.asarray(x, dtype=np.float64), np.asarray(y, dtype=np.float64)
    if drop_first:
        xs, ys = xs[1:], ys[1:]
    keep = (xs > 0) & (ys > 0)
    if keep.sum() < 2:
        return float("nan")
    return float(np.polyfit(np.log(xs[keep]), np.log(ys[keep]), 1)[0])


def moment_window(alpha: float) -> float:
    """Moment orders p > 2/(1-2α) have finite E|X_t|^p under the Hölder hypotheses."""
    return 2.0 / (1.0 - 2.0 * alpha)


def check_moment_order(p: float, alpha: float, strict: bool = True) -> None:
    """
    Raises:
        MomentWindowError: If p ≤ 2/(1-2α) and ``strict``
    """
    if p > moment_window(alpha):
        return
    if strict:
        raise MomentWindowError(p, alpha)
    logger.warning(
        f"moment order p={p} is below the window 2/(1-2α)={moment_window(alpha):.4g}; "
        "estimating anyway"
    )


def dyadic_times(grid: TimeGrid, depth: int = 3) -> list[float]:
    while depth > 0 and grid.n % (2**depth) != 0:
        depth -= 1
    return grid.dyadic_nodes(depth)


def mc_moment(
    config: ExperimentConfig,
    center: float = 0.0,
    paths: SamplePath | None = None,
) -> ResultTable:
    """
    E|X_t - center|^p at the dyadic times T/8, ..., T with batch-means standard errors.

    Columns: t, p, estimate, stderr.

    Raises:
        MomentWindowError: If p ≤ 2/(1-2α) and ``config.strict_window``
    """
    p = config.moment_order
    alpha = config.alpha
    check_moment_order(p, alpha, config.strict_window)
    paths = paths if paths is not None else simulate_config(config)
    values = np.asarray(paths.values).reshape(-1, config.n + 1)
    rows = []
    for t in dyadic_times(config.grid):
        samples = np.abs(values[:, config.grid.node_index(t)] - center) ** p
        estimate, stderr = batch_means(samples)
        rows.append([t, p, estimate, stderr])
    return ResultTable(
        header=["t", "p", "estimate", "stderr"],
        rows=np.array(rows),
        notes={"alpha": alpha, "window": moment_window(alpha), "paths": config.paths},
    )


def holder_exponent_floor(alpha: float, p: float) -> float:
    """p·min(α, 1/2 - α, (1 - 2α)/4): the smallest exponent among the modulus estimates."""
    return p * min(alpha, 0.5 - alpha, (1.0 - 2.0 * alpha) / 4.0)


def default_lags(grid: TimeGrid) -> list[float]:
    """Δt·2^k below T/2."""
    lags = []
    k = 0
    while grid.dt * 2**k < grid.horizon / 2.0:
        lags.append(grid.dt * 2**k)
        k += 1
    return lags


def mc_holder_modulus(
    config: ExperimentConfig,
    lags: Sequence[float] | None = None,
    paths: SamplePath | None = None,
) -> ResultTable:
    """
    E|X_{t+δ} - X_t|^p at t = T/2 for every lag δ, with the log-log slope fitted without the
    smallest lag (notes: slope, predicted_floor). p defaults to 2.

    Raises:
        ParameterError: If a lag is outside (0, T/2) or not a multiple of Δt
    """
    grid = config.grid
    p = config.p if config.p is not None else 2.0
    chosen = list(lags if lags is not None else (config.lags or default_lags(grid)))
    t = grid.horizon / 2.0
    start = grid.node_index(t)
    for lag in chosen:
        if not 0.0 < lag < grid.horizon / 2.0:
            raise ParameterError(f"lag {lag} is outside (0, T/2)")
    paths = paths if paths is not None else simulate_config(config)
    values = np.asarray(paths.values).reshape(-1, config.n + 1)
    rows = []
    for lag in sorted(chosen):
        end = grid.node_index(t + lag)
        estimate, _ = batch_means(np.abs(values[:, end] - values[:, start]) ** p)
        rows.append([lag, p, estimate])
    table = np.array(rows)
    slope = log_log_slope(table[:, 0], table[:, 2], drop_first=len(rows) > 2)
    floor = holder_exponent_floor(config.alpha, p)
    logger.info(f"holder modulus slope={slope:.4f} (floor {floor:.4f})")
    return ResultTable(
        header=["delta", "p", "estimate"],
        rows=table,
        notes={"slope": slope, "predicted_floor": floor, "t": t},
    )


def convergence_study(
    config: ExperimentConfig, levels: Sequence[int] | None = None
) -> ResultTable:
    """
    Coupled gaps E|X^{(n)}_T - X^{(2n)}_T|² for each n in ``levels``.

    All levels are driven by one Brownian path on the grid with 2·max(levels) steps; coarse
    increments are sums of fine ones. Columns: n, gap, median_gap; notes: slope of gap in n.

    Raises:
        ParameterError: If levels are not increasing powers-of-two multiples of each other
    """
    chosen = sorted(levels if levels is not None else config.levels)
    if not chosen or any(b % a != 0 or (b // a) & (b // a - 1) for a, b in zip(chosen, chosen[1:])):
        raise ParameterError(f"levels must increase by powers of two, got {chosen}")
    fine = TimeGrid(horizon=config.T, n=2 * chosen[-1])
    kernel = config.kernel_model
    coeffs = get_fixture(config.fixture)

    def gaps_chunk(chunk: range) -> FloatArray:
        driver = BrownianDriver.ensemble(config.seed, fine, len(chunk), first_path=chunk.start)
        terminal: dict[int, FloatArray] = {}
        for n in sorted({*chosen, *(2 * n for n in chosen)}):
            coarse = driver.coarsen(fine.n // n)
            terminal[n] = np.asarray(euler_solve(kernel, coeffs, coarse, config.x0).values[:, -1])
        return np.stack([(terminal[n] - terminal[2 * n]) ** 2 for n in chosen], axis=-1)

    gaps = np.concatenate(map_chunks(gaps_chunk, config.paths, config.workers), axis=0)
    mean_gaps = gaps.mean(axis=0)
    rows = np.column_stack([chosen, mean_gaps, np.median(gaps, axis=0)])
    slope = log_log_slope(chosen, mean_gaps)
    logger.info(f"convergence study levels={chosen} slope={slope:.4f}")
    return ResultTable(header=["n", "gap", "median_gap"], rows=rows, notes={"slope": slope})


# ============================================================================
# Path independence
# ============================================================================


def _verify_once(config: ExperimentConfig, driver: BrownianDriver) -> ResidualReport:
    kernel = config.kernel_model
    v = get_candidate(config.candidate)
    coeffs = get_fixture(config.fixture)
    if isinstance(kernel, FbmSimpleKernel):
        return fbm_verify(kernel.params, v, coeffs, driver, config.x0, config.z_probes)
    return verify_path_independence(kernel, v, coeffs, driver, config.x0, config.z_probes)


def verify_pi_study(config: ExperimentConfig) -> ResidualReport:
    """
    Path-independence report at ``config.n`` over ``config.paths`` paths (residual grids from
    path 0), with the median pathwise gap at every refinement level, all levels driven by one
    fine ensemble.
    """
    driver = BrownianDriver.ensemble(config.seed, config.grid, config.paths)
    report = _verify_once(config, driver)
    levels = sorted(config.levels)
    if not levels:
        return report
    fine_grid = TimeGrid(horizon=config.T, n=levels[-1])
    fine = BrownianDriver.ensemble(config.seed, fine_grid, config.paths)
    rows = []
    for n in levels:
        if levels[-1] % n != 0:
            raise ParameterError(f"level {n} does not divide the finest level {levels[-1]}")
        rows.append((n, _verify_once(config, fine.coarsen(levels[-1] // n)).median_gap()))
    return report.with_refinement(rows)


# ============================================================================
# Field-level path independence
# ============================================================================


def field_kernel(config: ExperimentConfig) -> ThetaHeatKernel:
    """θ-heat kernel whose trace is the configured kernel.

    Raises:
        ParameterError: Unless the kernel is a unit-scale power law (fbm-simple with C = 1
            included)
    """
    kernel = config.kernel_model
    unit = (isinstance(kernel, PowerLawKernel) and kernel.scale == 1.0) or (
        isinstance(kernel, FbmSimpleKernel) and kernel.C == 1.0
    )
    if not unit:
        raise ParameterError(
            f"the field needs a unit-scale power-law kernel, got {kernel.describe()}",
            suggestion="Use --kernel powerlaw:alpha=<a> or fbm-simple:H=<h>,C=1.",
        )
    return ThetaHeatKernel.from_alpha(config.alpha)


def _field_once(config: ExperimentConfig, driver: BrownianDriver) -> ResidualReport:
    k = field_kernel(config)
    sol = solve_field(k, get_fixture(config.fixture), driver, InitialCondition.constant(config.x0))
    phi = ThetaBump(theta=k.theta, c=config.bump_scale)
    return verify_field_path_independence(
        get_candidate(config.candidate), phi, sol, zprobes=config.z_probes
    )


def verify_field_study(config: ExperimentConfig) -> ResidualReport:
    """
    Pairing-level path independence with the θ-bump of scale ``config.bump_scale``, with the
    median pathwise gap at every refinement level in ``config.levels``.
    """
    report = _field_once(config, BrownianDriver.ensemble(config.seed, config.grid, config.paths))
    levels = sorted(config.levels)
    if not levels:
        return report
    fine_grid = TimeGrid(horizon=config.T, n=levels[-1])
    fine = BrownianDriver.ensemble(config.seed, fine_grid, config.paths)
    rows = []
    for n in levels:
        if levels[-1] % n != 0:
            raise ParameterError(f"level {n} does not divide the finest level {levels[-1]}")
        rows.append((n, _field_once(config, fine.coarsen(levels[-1] // n)).median_gap()))
    return report.with_refinement(rows)


def psi_limit_table(config: ExperimentConfig) -> ResultTable:
    """Columns m, scale (ψ^m(0)/c_θ), median_gap, max_gap for m in ``config.m_list``."""
    k = field_kernel(config)
    driver = BrownianDriver.ensemble(config.seed, config.grid, config.paths)
    sol = solve_field(k, get_fixture(config.fixture), driver, InitialCondition.constant(config.x0))
    rows = psi_limit_study(get_candidate(config.candidate), sol, config.m_list)
    return ResultTable(
        header=["m", "scale", "median_gap", "max_gap"],
        rows=np.array(rows, dtype=np.float64).reshape(-1, 4),
        notes={"theta": k.theta, "paths": config.paths},
    )
