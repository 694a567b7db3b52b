from __future__ import annotations

"""Base class for singular Volterra kernels."""

from abc import ABC, abstractmethod
from functools import lru_cache
from typing import Any

import numpy as np
from numpy.typing import ArrayLike

from svepath.types.base import SvepathModel
from svepath.types.core import FloatArray, KernelVariant, TimeGrid, frozen_array


class SingularKernel(SvepathModel, ABC):
    """
    Kernel K(t, s), finite for 0 ≤ s < t, behaving like (t - s)^{-singularity_exponent}
    on the diagonal.

    Subclasses supply the pointwise kernel and the two cell-weight matrices used by the
    Euler scheme; both matrices have shape (n + 1, n), row i holding the weights of
    cells j < i for node t_i (zero for j ≥ i).
    """

    @property
    @abstractmethod
    def variant(self) -> KernelVariant:
        """Kernel family."""

    @property
    @abstractmethod
    def singularity_exponent(self) -> float:
        """Exponent a with K(t, s) ~ (t - s)^{-a} as s → t."""

    @abstractmethod
    def evaluate(self, t: ArrayLike, s: ArrayLike) -> Any:
        """K(t, s), zero for s ≥ t."""

    # ========================================================================
    # Cell weights
    # ========================================================================

    @abstractmethod
    def _drift_weights(self, grid: TimeGrid) -> FloatArray:
        """w[i, j] ≈ ∫_{t_j}^{t_{j+1}} K(t_i, s) ds."""

    @abstractmethod
    def _diffusion_weights(self, grid: TimeGrid) -> FloatArray:
        """w[i, j] multiplying ΔB_j in the stochastic sum for node t_i."""

    def drift_weights(self, grid: TimeGrid) -> FloatArray:
        return _cached_weights(self, grid)[0]

    def diffusion_weights(self, grid: TimeGrid) -> FloatArray:
        return _cached_weights(self, grid)[1]

    def describe(self) -> str:
        """Kernel spec string understood by :func:`svepath.kernels.parse_kernel_spec`."""
        params = ",".join(f"{k}={v!r}" for k, v in self.model_dump().items())
        return f"{self.variant.value}:{params}"


def lower_index_pairs(n: int) -> tuple[FloatArray, FloatArray]:
    """Node indices i and cell indices j of every pair 0 ≤ j < i ≤ n."""
    rows, cols = np.tril_indices(n)
    return (rows + 1).astype(np.float64), cols.astype(np.float64)


def scatter_lower(n: int, values: FloatArray) -> FloatArray:
    """Place ``values`` (ordered as :func:`lower_index_pairs`) into an (n + 1, n) matrix."""
    out = np.zeros((n + 1, n))
    rows, cols = np.tril_indices(n)
    out[rows + 1, cols] = values
    return out


@lru_cache(maxsize=32)
def _cached_weights(kernel: SingularKernel, grid: TimeGrid) -> tuple[FloatArray, FloatArray]:
    return (
        frozen_array(kernel._drift_weights(grid)),
        frozen_array(kernel._diffusion_weights(grid)),
    )
