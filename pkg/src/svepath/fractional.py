"""Fractional transform pair with constant c_α = ∫_0^1 (1-r)^{α-1} r^{-α} dr.

    Y_t = ∫_0^t (t - s)^{α-1} U_s ds,        U_t = (1/c_α) d/dt ∫_0^t (t - s)^{-α} Y_s ds.
"""

from __future__ import annotations

import logging
import math
from typing import Literal

import numpy as np
from scipy import integrate, linalg

from svepath.exceptions import DomainError, NumericalError
from svepath.types.core import FloatArray, SamplePath, TimeGrid

logger = logging.getLogger(__name__)

InverseScheme = Literal["consistent", "cell"]


def _check_alpha(alpha: float, upper: float = 0.5) -> None:
    if not 0.0 < alpha < upper:
        raise DomainError(f"alpha must lie in (0, {upper:g}), got {alpha}")


def c_alpha(alpha: float, method: Literal["closed", "quadrature"] = "closed") -> float:
    """
    c_α = B(α, 1 - α) = π / sin(πα).

    ``method="quadrature"`` integrates the Beta density with QUADPACK's algebraic endpoint
    weights r^{-α}(1 - r)^{α-1}, so the integrand left over is the constant 1.

    Raises:
        DomainError: Unless 0 < alpha < 1
    """
    _check_alpha(alpha, upper=1.0)
    if method == "closed":
        return math.pi / math.sin(math.pi * alpha)
    if method != "quadrature":
        raise DomainError(f"unknown method {method!r}; use 'closed' or 'quadrature'")
    result = integrate.quad(
        lambda r: 1.0, 0.0, 1.0, weight="alg", wvar=(-alpha, alpha - 1.0), full_output=1
    )
    if len(result) > 3:
        raise NumericalError("c_alpha quadrature did not converge", diagnostics={"alpha": alpha})
    return float(result[0])


def _cell_integrals(exponent: float, dt: float, count: int) -> FloatArray:
    """∫ of (t - s)^{exponent-1} over the cells k = 1..count back from t, in closed form."""
    lags = np.arange(1, count + 1, dtype=np.float64)
    return dt**exponent * (lags**exponent - (lags - 1.0) ** exponent) / exponent


def forward_weights(alpha: float, grid: TimeGrid) -> FloatArray:
    """a_k = ∫_{t_{i-k}}^{t_{i-k+1}} (t_i - s)^{α-1} ds, k = 1..n."""
    return _cell_integrals(alpha, grid.dt, grid.n)


def _lower_toeplitz(first_column: FloatArray) -> FloatArray:
    return np.asarray(linalg.toeplitz(first_column, np.zeros_like(first_column)))


def frac_forward(alpha: float, path: SamplePath) -> SamplePath:
    """
    Y_{t_i} = Σ_{j<i} a_{i-j} U_{t_j} with exact cell integrals of (t_i - s)^{α-1}.

    Raises:
        DomainError: Unless 0 < alpha < 1/2
    """
    _check_alpha(alpha)
    grid = path.grid
    column = np.concatenate([[0.0], forward_weights(alpha, grid)])
    y = path.values @ _lower_toeplitz(column).T
    return SamplePath(grid=grid, values=y)


def inverse_weights(
    alpha: float, grid: TimeGrid, scheme: InverseScheme = "consistent"
) -> FloatArray:
    """
    Weights β_k, k = 0..n, with Z_{t_i} = Σ_{j ≤ i} β_{i-j} Y_{t_j}.

    ``cell``: β_0 = 0 and β_k the exact cell integral of (t_i - s)^{-α} over the k-th cell.
    ``consistent``: β = c_α Δt (1 - x)^{-1} / Â(x) in generating functions, with
    Â(x) = Σ_k a_{k+1} x^k, which makes frac_inverse invert frac_forward exactly on the
    grid; β_k approaches the cell integral at relative rate O(1/k).
    """
    _check_alpha(alpha)
    n, dt = grid.n, grid.dt
    if scheme == "cell":
        return np.concatenate([[0.0], _cell_integrals(1.0 - alpha, dt, n)])
    if scheme != "consistent":
        raise DomainError(f"unknown scheme {scheme!r}; use 'consistent' or 'cell'")
    shifted = _cell_integrals(alpha, dt, n + 1)
    unit = np.zeros(n + 1)
    unit[0] = 1.0
    reciprocal = linalg.solve_triangular(_lower_toeplitz(shifted), unit, lower=True)
    return c_alpha(alpha) * dt * np.cumsum(reciprocal)


def frac_inverse(
    alpha: float, path: SamplePath, scheme: InverseScheme = "consistent", y0_tol: float = 1e-12
) -> SamplePath:
    """
    U_{t_i} = (Z_{t_{i+1}} - Z_{t_i}) / (Δt c_α) for i < n, and U_{t_n} = U_{t_{n-1}}.

    Z is the discrete Riemann-Liouville integral of Y with the weights of
    :func:`inverse_weights`. The pair assumes Y_0 = 0; a nonzero Y_0 is logged and
    treated like any other value.
    """
    _check_alpha(alpha)
    grid = path.grid
    y0 = np.abs(np.asarray(path.values[..., 0]))
    if np.any(y0 > y0_tol):
        logger.warning(
            f"frac_inverse: Y_0 = {float(y0.max()):.3e} is not zero; "
            "subtract the initial value before inverting"
        )
    weights = inverse_weights(alpha, grid, scheme)
    z = path.values @ _lower_toeplitz(weights).T
    u = np.empty_like(z)
    u[..., :-1] = np.diff(z, axis=-1) / (grid.dt * c_alpha(alpha))
    u[..., -1] = u[..., -2]
    return SamplePath(grid=grid, values=u)
