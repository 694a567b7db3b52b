from __future__ import annotations

"""Power-law kernels C (t - s)^{-α}."""

from typing import Any

import numpy as np
from numpy.typing import ArrayLike
from pydantic import Field

from svepath.fbm_kernels import FbmParams
from svepath.kernels.base import SingularKernel
from svepath.types.core import FloatArray, KernelVariant, TimeGrid


def power_law_weights(alpha: float, scale: float, grid: TimeGrid) -> tuple[FloatArray, FloatArray]:
    """
    Drift and diffusion weights of scale·(t - s)^{-α} on a uniform grid.

    Drift weights are the exact cell integrals
    scale·((t_i - t_j)^{1-α} - (t_i - t_{j+1})^{1-α})/(1 - α). Diffusion weights match the
    second moment of each cell: at lag l = i - j the weight is
    scale·Δt^{-α}·sqrt((l^{1-2α} - (l - 1)^{1-2α})/(1 - 2α)), so Σ_j w_ij² Δt equals
    scale²·t_i^{1-2α}/(1 - 2α) exactly. Both depend on i - j only.
    """
    n, dt = grid.n, grid.dt
    lags = np.arange(1, n + 1, dtype=np.float64)
    beta = 1.0 - alpha
    drift_by_lag = scale * dt**beta * (lags**beta - (lags - 1.0) ** beta) / beta
    gamma = 1.0 - 2.0 * alpha
    cell_moment = (lags**gamma - (lags - 1.0) ** gamma) / gamma
    diffusion_by_lag = scale * dt ** (-alpha) * np.sqrt(cell_moment)
    lag = np.arange(n + 1)[:, None] - np.arange(n)[None, :]
    below = lag >= 1
    index = np.clip(lag - 1, 0, n - 1)
    return (
        np.where(below, drift_by_lag[index], 0.0),
        np.where(below, diffusion_by_lag[index], 0.0),
    )


class PowerLawKernel(SingularKernel):
    """K(t, s) = scale·(t - s)^{-α}, 0 < α < 1/2."""

    alpha: float = Field(gt=0, lt=0.5)
    scale: float = Field(default=1.0, gt=0)

    @property
    def variant(self) -> KernelVariant:
        return KernelVariant.POWER_LAW

    @property
    def singularity_exponent(self) -> float:
        return self.alpha

    def evaluate(self, t: ArrayLike, s: ArrayLike) -> Any:
        ta = np.asarray(t, dtype=np.float64)
        sa = np.asarray(s, dtype=np.float64)
        inside = sa < ta
        gap = np.where(inside, ta - sa, 1.0)
        values = np.where(inside, self.scale * gap ** (-self.alpha), 0.0)
        return float(values) if np.ndim(values) == 0 else values

    def _drift_weights(self, grid: TimeGrid) -> FloatArray:
        return power_law_weights(self.alpha, self.scale, grid)[0]

    def _diffusion_weights(self, grid: TimeGrid) -> FloatArray:
        return power_law_weights(self.alpha, self.scale, grid)[1]


class FbmSimpleKernel(SingularKernel):
    """K̃_H(t, s) = C (t - s)^{H - 1/2}: the power law with α = 1/2 - H, scaled by C."""

    H: float = Field(gt=0, lt=0.5)
    C: float = Field(default=1.0, gt=0)

    @property
    def variant(self) -> KernelVariant:
        return KernelVariant.FBM_SIMPLE

    @property
    def params(self) -> FbmParams:
        return FbmParams(H=self.H, C=self.C)

    @property
    def singularity_exponent(self) -> float:
        return 0.5 - self.H

    def as_power_law(self) -> PowerLawKernel:
        return PowerLawKernel(alpha=0.5 - self.H, scale=self.C)

    def evaluate(self, t: ArrayLike, s: ArrayLike) -> Any:
        return self.as_power_law().evaluate(t, s)

    def _drift_weights(self, grid: TimeGrid) -> FloatArray:
        return power_law_weights(0.5 - self.H, self.C, grid)[0]

    def _diffusion_weights(self, grid: TimeGrid) -> FloatArray:
        return power_law_weights(0.5 - self.H, self.C, grid)[1]
