"""Euler scheme, Picard iteration and the mollified solution sequence for SVEs.

The equation is

    X_t = g(t) + ∫_0^t K(t, s) b(s, X_s) ds + ∫_0^t K(t, s) σ(s, X_s) dB_s

on a uniform grid. All solvers work on one path (increments of shape (n,)) or on an
ensemble (shape (P, n)) with the same code; results are bit-identical for a fixed driver.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Callable, Sequence
from typing import Any

import numpy as np
from pydantic import Field

from svepath.coefficients import CoefficientPair, mollify_pair
from svepath.exceptions import BlowUpError, ConvergenceError, ParameterError
from svepath.kernels.base import SingularKernel
from svepath.types.base import ArrayModel
from svepath.types.core import BrownianDriver, FloatArray, SamplePath, TimeGrid

logger = logging.getLogger(__name__)

BLOWUP_THRESHOLD = 1e12

InitialCurve = float | Callable[[FloatArray], Any] | FloatArray


def _initial_curve(g: InitialCurve, grid: TimeGrid, batch: tuple[int, ...]) -> FloatArray:
    """g at every node, broadcast to shape batch + (n + 1,)."""
    shape = batch + (grid.n + 1,)
    if callable(g):
        values = np.asarray(g(grid.nodes), dtype=np.float64)
    else:
        values = np.asarray(g, dtype=np.float64)
    if values.ndim > 0 and values.shape[-1] != grid.n + 1:
        raise ParameterError(
            f"initial curve has {values.shape[-1]} values for a grid with {grid.n + 1} nodes"
        )
    try:
        return np.broadcast_to(values, shape).copy()
    except ValueError:
        raise ParameterError(
            f"initial curve of shape {values.shape} does not broadcast to {shape}"
        ) from None


def _check_driver(driver: BrownianDriver, grid: TimeGrid | None = None) -> TimeGrid:
    if grid is not None and driver.grid != grid:
        raise ParameterError(
            f"driver grid (T={driver.grid.horizon}, n={driver.grid.n}) does not match "
            f"(T={grid.horizon}, n={grid.n})"
        )
    return driver.grid


def _check_finite(values: FloatArray, step: int, threshold: float) -> None:
    bad = ~np.isfinite(values) | (np.abs(values) > threshold)
    if np.any(bad):
        worst = float(np.asarray(values)[bad].ravel()[0])
        raise BlowUpError(step=step, value=worst, threshold=threshold)


def euler_solve(
    kernel: SingularKernel,
    coeffs: CoefficientPair,
    driver: BrownianDriver,
    g: InitialCurve,
    threshold: float = BLOWUP_THRESHOLD,
) -> SamplePath:
    """
    Euler-Maruyama scheme for the Volterra equation.

    X_{t_i} = g(t_i) + Σ_{j<i} w_{ij} b(t_j, X_{t_j}) + Σ_{j<i} k_{ij} σ(t_j, X_{t_j}) ΔB_j

    with the kernel's drift cell weights w and diffusion weights k (cell-variance
    matching for power-law kernels). Coefficients are evaluated at the left end of each cell.

    Args:
        kernel: Singular kernel
        coeffs: Drift and diffusion
        driver: Brownian increments, one path or an ensemble
        g: Initial curve: a constant, a function of the node times, or node values

    Returns:
        SamplePath with values of shape (n + 1,) or (P, n + 1)

    Raises:
        BlowUpError: If a value becomes non-finite or exceeds ``threshold``
        ParameterError: If g does not match the grid
    """
    grid = _check_driver(driver)
    n = grid.n
    drift_w = kernel.drift_weights(grid)
    diffusion_w = kernel.diffusion_weights(grid)
    increments = driver.increments
    batch = increments.shape[:-1]
    t = grid.nodes

    x = _initial_curve(g, grid, batch)
    _check_finite(x[..., 0], 0, threshold)
    drift_terms = np.empty(batch + (n,))
    noise_terms = np.empty(batch + (n,))
    for i in range(1, n + 1):
        j = i - 1
        drift_terms[..., j] = coeffs.b(t[j], x[..., j])
        noise_terms[..., j] = coeffs.sigma(t[j], x[..., j]) * increments[..., j]
        drift = drift_terms[..., :i] @ drift_w[i, :i]
        noise = noise_terms[..., :i] @ diffusion_w[i, :i]
        x[..., i] += drift + noise
        _check_finite(x[..., i], i, threshold)
    return SamplePath(grid=grid, values=x)


class PicardResult(ArrayModel):
    """Last Picard iterate with its gap history."""

    path: SamplePath
    iterations: int
    gaps: list[float] = Field(default_factory=list)

    @property
    def final_gap(self) -> float:
        return self.gaps[-1] if self.gaps else 0.0


def picard_solve(
    kernel: SingularKernel,
    coeffs: CoefficientPair,
    driver: BrownianDriver,
    g: InitialCurve,
    max_iter: int = 100,
    tol: float = 1e-10,
) -> PicardResult:
    """
    Picard iteration on the discretized equation.

    U⁽⁰⁾ = g; U⁽ᵏ⁾ applies the Euler update with U⁽ᵏ⁻¹⁾ inside b and σ on the same driver.
    Stops once max_i |U⁽ᵏ⁾ - U⁽ᵏ⁻¹⁾| ≤ tol.

    Raises:
        ParameterError: If the coefficients are not both Lipschitz
        ConvergenceError: If ``max_iter`` iterations do not reach ``tol``; carries the gaps
    """
    if not coeffs.is_lipschitz:
        raise ParameterError(
            f"Picard iteration needs Lipschitz coefficients (gamma = 1), pair '{coeffs.name}' "
            f"has gamma_b={coeffs.b.gamma}, gamma_sigma={coeffs.sigma.gamma}",
            suggestion="Mollify the coefficients first (coefficients.mollify_pair).",
        )
    grid = _check_driver(driver)
    drift_w = kernel.drift_weights(grid)
    diffusion_w = kernel.diffusion_weights(grid)
    increments = driver.increments
    t = grid.nodes
    base = _initial_curve(g, grid, increments.shape[:-1])

    current = base
    gaps: list[float] = []
    for iteration in range(1, max_iter + 1):
        drift = np.stack([coeffs.b(t[j], current[..., j]) for j in range(grid.n)], axis=-1)
        noise = np.stack(
            [coeffs.sigma(t[j], current[..., j]) for j in range(grid.n)], axis=-1
        ) * increments
        following = base + drift @ drift_w.T + noise @ diffusion_w.T
        _check_finite(following, iteration, BLOWUP_THRESHOLD)
        gap = float(np.max(np.abs(following - current)))
        gaps.append(gap)
        current = following
        logger.debug(f"picard iteration {iteration}: gap={gap:.3e}")
        if gap <= tol:
            return PicardResult(
                path=SamplePath(grid=grid, values=current), iterations=iteration, gaps=gaps
            )
    raise ConvergenceError(
        f"Picard iteration did not reach tol={tol} in {max_iter} iterations", gaps=gaps
    )


def default_gap_order(alpha: float) -> float:
    """4, raised to ⌈2/(1-2α)⌉ + 2 when 4 does not clear the moment window 2/(1-2α)."""
    window = 2.0 / (1.0 - 2.0 * alpha)
    return 4.0 if window < 4.0 else float(math.ceil(window) + 2)


def lp_gap(a: SamplePath, b: SamplePath, p: float) -> FloatArray:
    """(1/n) Σ_{i=1..n} |a_{t_i} - b_{t_i}|^p, per path."""
    diff = np.abs(a.values[..., 1:] - b.values[..., 1:]) ** p
    return np.asarray(diff.mean(axis=-1))


class MollifiedResult(ArrayModel):
    """Solutions U^m on one driver for each mollification index, with pairwise gaps.

    ``gaps[..., k, l]`` is the discrete L^p gap between U^{m_k} and U^{m_l}, per path.
    """

    m_list: list[int]
    paths: list[SamplePath]
    gaps: np.ndarray
    p: float

    def gap(self, m: int, other: int) -> FloatArray:
        k, l_ = self.m_list.index(m), self.m_list.index(other)
        return np.asarray(self.gaps[..., k, l_])

    def median_gaps(self) -> FloatArray:
        """Gap matrix with the median taken over paths."""
        if self.gaps.ndim == 2:
            return np.asarray(self.gaps)
        return np.asarray(np.median(self.gaps.reshape(-1, *self.gaps.shape[-2:]), axis=0))


def mollified_solve(
    kernel: SingularKernel,
    coeffs: CoefficientPair,
    driver: BrownianDriver,
    g: InitialCurve,
    m_list: Sequence[int],
    p: float | None = None,
) -> MollifiedResult:
    """
    Solve with mollified coefficients (b^m, σ^m) for every m on the same driver.

    Raises:
        ParameterError: If ``m_list`` is empty or not increasing
    """
    ms = list(m_list)
    if not ms:
        raise ParameterError("m_list must not be empty")
    if any(b <= a for a, b in zip(ms, ms[1:])):
        raise ParameterError(f"m_list must be strictly increasing, got {ms}")
    order = default_gap_order(kernel.singularity_exponent) if p is None else p
    paths = [euler_solve(kernel, mollify_pair(coeffs, m), driver, g) for m in ms]
    batch = driver.increments.shape[:-1]
    gaps = np.zeros(batch + (len(ms), len(ms)))
    for k, first in enumerate(paths):
        for l_ in range(k + 1, len(ms)):
            gaps[..., k, l_] = gaps[..., l_, k] = lp_gap(first, paths[l_], order)
    logger.info(f"mollified_solve m={ms} p={order}")
    return MollifiedResult(m_list=ms, paths=paths, gaps=gaps, p=order)
