from __future__ import annotations

"""The exact Volterra kernel K_H of fractional Brownian motion on a grid."""

from typing import Any

import numpy as np
from numpy.typing import ArrayLike
from pydantic import Field, field_validator
from scipy import special

from svepath.fbm_kernels import kernel_exact
from svepath.kernels.base import SingularKernel, lower_index_pairs, scatter_lower
from svepath.types.core import FloatArray, KernelVariant, TimeGrid

# 3-point Gauss-Legendre rule on [-1, 1]
_GL_NODES = np.array([-np.sqrt(0.6), 0.0, np.sqrt(0.6)])
_GL_WEIGHTS = np.array([5.0, 8.0, 5.0]) / 9.0
_JACOBI_ORDER = 64


class FbmExactKernel(SingularKernel):
    """
    K_H(t, s) via the hypergeometric representation.

    K_H(t, s) is infinite at s = 0, and at s = t for H < 1/2, so cells are never evaluated at
    their ends. Drift cells use 3-point Gauss-Legendre. The stochastic sum uses the midpoint
    value K_H(t_i, t_j + Δt/2) on interior cells; on the first and the last cell of each row
    the weight is sqrt(∫_cell K_H(t_i, r)² dr / Δt), so those cells carry their true variance.
    The scaling K_H(λt, λs) = λ^{H-1/2} K_H(t, s) lets every weight be computed on integer
    times.
    """

    H: float = Field(gt=0, lt=1)

    @field_validator("H")
    @classmethod
    def _not_brownian(cls, v: float) -> float:
        if v == 0.5:
            raise ValueError("H = 1/2 has no singular kernel; use the power law instead")
        return v

    @property
    def variant(self) -> KernelVariant:
        return KernelVariant.FBM_EXACT

    @property
    def singularity_exponent(self) -> float:
        return 0.5 - self.H

    def evaluate(self, t: ArrayLike, s: ArrayLike) -> Any:
        ta, sa = np.broadcast_arrays(
            np.asarray(t, dtype=np.float64), np.asarray(s, dtype=np.float64)
        )
        inside = (sa > 0) & (sa < ta)
        values = np.zeros(ta.shape)
        if inside.any():
            values[inside] = kernel_exact(self.H, ta[inside], sa[inside])
        return float(values) if values.ndim == 0 else values

    def _drift_weights(self, grid: TimeGrid) -> FloatArray:
        i, j = lower_index_pairs(grid.n)
        scale = grid.dt ** (self.H + 0.5)
        total = np.zeros_like(i)
        for node, weight in zip(_GL_NODES, _GL_WEIGHTS, strict=True):
            total += weight * 0.5 * kernel_exact(self.H, i, j + 0.5 * (1.0 + node))
        return scatter_lower(grid.n, scale * total)

    def _diffusion_weights(self, grid: TimeGrid) -> FloatArray:
        i, j = lower_index_pairs(grid.n)
        values = kernel_exact(self.H, i, j + 0.5)
        # cells touching r = 0 or r = t_i carry the integrable singularities of K_H
        edge = -abs(1.0 - 2.0 * self.H)
        diagonal = 2.0 * self.H - 1.0
        first, last = j == 0, j == i - 1
        for mask, left, right in (
            (first & last, edge, diagonal),
            (first & ~last, edge, 0.0),
            (last & ~first, 0.0, diagonal),
        ):
            if mask.any():
                values[mask] = np.sqrt(self._cell_moment(i[mask], j[mask], left, right))
        return scatter_lower(grid.n, grid.dt ** (self.H - 0.5) * values)

    def _cell_moment(self, i: FloatArray, j: FloatArray, left: float, right: float) -> FloatArray:
        """
        ∫_j^{j+1} K_H(i, r)² dr on integer times by Gauss-Jacobi quadrature.

        ``left`` and ``right`` are the exponents of (r - j) and (j + 1 - r) that the squared
        kernel behaves like at the two ends of the cell.
        """
        x, w = special.roots_jacobi(_JACOBI_ORDER, right, left)
        u = 0.5 * (1.0 + x)
        r = j[:, None] + u[None, :]
        squared = kernel_exact(self.H, i[:, None], r) ** 2
        smooth = squared / (u**left * (1.0 - u) ** right)
        return np.asarray(smooth @ w * 2.0 ** -(left + right + 1.0))
