"""Fractional Brownian motion: covariance R_H, constant V_H, kernels K_H and K̃_H, path synthesis.

For H ∈ (0, 1/2) fBm has the Volterra representation B^H_t = ∫_0^t K_H(t, s) dB_s with

    K_H(t, r) = (t - r)^{H - 1/2} / Γ(H + 1/2) · ₂F₁(1/2 - H, H - 1/2; H + 1/2; 1 - t/r),

and the SVE application replaces K_H by K̃_H(t, s) = C (t - s)^{H - 1/2}, the power-law kernel
with α = 1/2 - H.
"""

from __future__ import annotations

import logging
import math
from typing import Any, Literal

import numpy as np
from numpy.typing import ArrayLike
from pydantic import Field, field_validator
from scipy import integrate, special

from svepath.exceptions import ConvergenceError, DomainError, NumericalError, ParameterError
from svepath.types.base import SvepathModel
from svepath.types.core import BrownianDriver, FloatArray, SamplePath, TimeGrid

logger = logging.getLogger(__name__)

SERIES_TOL = 1e-14
SERIES_MAX_TERMS = 100_000
# Above this mapped argument the series is replaced by the connection formula at w = 1.
SERIES_SWITCH = 0.75
DEGENERATE_GAP = 1e-8
UNIT_GUARD = 1e-3


class FbmParams(SvepathModel):
    """Hurst index H and the scale C of the simplified kernel."""

    H: float = Field(gt=0, lt=1)
    C: float = Field(default=1.0, gt=0)

    @field_validator("H")
    @classmethod
    def _not_brownian(cls, v: float) -> float:
        if v == 0.5:
            raise ValueError("H = 1/2 is standard Brownian motion; V_H is singular there")
        return v

    @property
    def alpha(self) -> float:
        """Power-law exponent α = 1/2 - H of K̃_H (SVE application needs H < 1/2)."""
        if self.H >= 0.5:
            raise DomainError(
                f"the SVE application needs H < 1/2, got H={self.H}",
                suggestion="Kernels with H > 1/2 are not singular and are out of scope.",
            )
        return 0.5 - self.H

    @property
    def theta(self) -> float:
        return 1.0 / self.alpha - 2.0


def _check_hurst(H: float) -> None:
    if not 0.0 < H < 1.0 or H == 0.5:
        raise DomainError(f"Hurst index must lie in (0, 1) without 1/2, got H={H}")


def v_constant(H: float) -> float:
    """V_H = Γ(2 - 2H) cos(πH) / (πH(1 - 2H))."""
    _check_hurst(H)
    numerator = special.gamma(2.0 - 2.0 * H) * math.cos(math.pi * H)
    return float(numerator / (math.pi * H * (1.0 - 2.0 * H)))


def covariance(H: float, s: float, t: float) -> float:
    """R_H(s, t) = (V_H/2)(s^{2H} + t^{2H} - |t - s|^{2H})."""
    if s < 0 or t < 0:
        raise ParameterError(f"times must be non-negative, got s={s}, t={t}")
    h2 = 2.0 * H
    return 0.5 * v_constant(H) * (s**h2 + t**h2 - abs(t - s) ** h2)


def _series(a: float, b: float, c: float, w: FloatArray) -> FloatArray:
    """Σ (a)_k (b)_k / ((c)_k k!) w^k with term-ratio stopping, elementwise."""
    total = np.ones_like(w)
    term = np.ones_like(w)
    active = np.ones(w.shape, dtype=bool)
    for k in range(SERIES_MAX_TERMS):
        ratio = (a + k) * (b + k) / ((c + k) * (k + 1.0)) * w
        term = np.where(active, term * ratio, 0.0)
        total = total + term
        next_ratio = np.abs((a + k + 1.0) * (b + k + 1.0) / ((c + k + 1.0) * (k + 2.0)) * w)
        done = (np.abs(term) <= SERIES_TOL * np.abs(total)) & (next_ratio < 1.0)
        active &= ~done
        if not active.any():
            return total
    raise ConvergenceError(
        "hypergeometric series did not converge",
        diagnostics={"a": a, "b": b, "c": c, "terms": SERIES_MAX_TERMS, "max_w": float(w.max())},
    )


def _near_unit(a: float, b: float, c: float, y: FloatArray) -> FloatArray:
    """₂F₁(a, b; c; 1 - y) by the connection formula at 1, for c - a - b not an integer."""
    s = c - a - b
    first = special.gamma(c) * special.gamma(s) * special.rgamma(c - a) * special.rgamma(c - b)
    second = special.gamma(c) * special.gamma(-s) * special.rgamma(a) * special.rgamma(b)
    value = first * _series(a, b, 1.0 - s, y)
    if second != 0.0:
        value = value + second * y**s * _series(c - a, c - b, 1.0 + s, y)
    return np.asarray(value, dtype=np.float64)


def gauss_2f1(
    a: float,
    b: float,
    c: float,
    z: ArrayLike,
    pfaff: Literal["a", "b"] = "a",
    one_minus_z: ArrayLike | None = None,
) -> Any:
    """
    Gauss hypergeometric function ₂F₁(a, b; c; z) for z ≤ 0.

    The Pfaff transformation (on ``a`` or on ``b``) maps z into w = z/(z-1) ∈ [0, 1):

        ₂F₁(a, b; c; z) = (1-z)^{-a} ₂F₁(a, c-b; c; w) = (1-z)^{-b} ₂F₁(c-a, b; c; w).

    The transformed function is summed as a power series for w ≤ 3/4 and through the
    connection formula in 1 - w = 1/(1-z) above that.

    Args:
        a, b, c: Parameters; c must not be a non-positive integer
        z: Argument(s), all ≤ 0
        pfaff: Which parameter the Pfaff transformation acts on
        one_minus_z: 1 - z when the caller knows it more precisely than z

    Raises:
        ParameterError: For z > 0 or c a non-positive integer
        NumericalError: When the mapped argument reaches 1 - 1e-3 on a degenerate
            connection (c - a - b integral) or a series fails to converge
    """
    if c <= 0 and c == int(c):
        raise ParameterError(f"c must not be a non-positive integer, got c={c}")
    za = np.asarray(z, dtype=np.float64)
    if np.any(za > 0):
        raise ParameterError("gauss_2f1 only supports z <= 0")
    omz = 1.0 - za if one_minus_z is None else np.asarray(one_minus_z, dtype=np.float64)
    if pfaff == "a":
        prefactor = omz ** (-a)
        A, B = a, c - b
    elif pfaff == "b":
        prefactor = omz ** (-b)
        A, B = c - a, b
    else:
        raise ParameterError(f"pfaff must be 'a' or 'b', got {pfaff!r}")

    flat_omz = np.atleast_1d(omz).ravel()
    w = 1.0 - 1.0 / flat_omz
    y = 1.0 / flat_omz
    out = np.empty_like(w)
    low = w <= SERIES_SWITCH
    if low.any():
        out[low] = _series(A, B, c, w[low])
    high = ~low
    if high.any():
        s = c - A - B
        if abs(s - round(s)) < DEGENERATE_GAP:
            if float(w[high].max()) >= 1.0 - UNIT_GUARD:
                raise NumericalError(
                    "mapped hypergeometric argument too close to 1 for a degenerate connection",
                    diagnostics={"a": a, "b": b, "c": c, "max_w": float(w[high].max())},
                    suggestion="Use the other Pfaff branch or keep |z| below about 1e3.",
                )
            out[high] = _series(A, B, c, w[high])
        else:
            out[high] = _near_unit(A, B, c, y[high])
    values = prefactor * out.reshape(np.shape(omz))
    if np.ndim(values) == 0:
        return float(values)
    return values


def kernel_exact(H: float, t: ArrayLike, r: ArrayLike) -> Any:
    """
    K_H(t, r) for 0 < r < t (elementwise).

    Raises:
        DomainError: If H is outside (0, 1) \\ {1/2} or some r is not in (0, t)
    """
    _check_hurst(H)
    ta = np.asarray(t, dtype=np.float64)
    ra = np.asarray(r, dtype=np.float64)
    if np.any(ra <= 0) or np.any(ra >= ta):
        raise DomainError("kernel_exact needs 0 < r < t")
    ratio = ta / ra
    f = gauss_2f1(0.5 - H, H - 0.5, H + 0.5, 1.0 - ratio, pfaff="b", one_minus_z=ratio)
    values = (ta - ra) ** (H - 0.5) * special.rgamma(H + 0.5) * f
    return float(values) if np.ndim(values) == 0 else np.asarray(values)


def kernel_simple(params: FbmParams, t: ArrayLike, s: ArrayLike) -> Any:
    """K̃_H(t, s) = C (t - s)^{H - 1/2} 1_{[0, t)}(s)."""
    ta = np.asarray(t, dtype=np.float64)
    sa = np.asarray(s, dtype=np.float64)
    inside = (sa >= 0) & (sa < ta)
    gap = np.where(inside, ta - sa, 1.0)
    values = np.where(inside, params.C * gap ** (params.H - 0.5), 0.0)
    return float(values) if np.ndim(values) == 0 else values


def covariance_from_kernel(H: float, s: float, t: float, tol: float = 1e-10) -> float:
    """
    ∫_0^{s∧t} K_H(s, r) K_H(t, r) dr by QUADPACK algebraic-weight quadrature.

    Written as ∫_0^{s∧t} r^{2H-1} (s∧t - r)^β f(r) dr with β = H - 1/2 off the diagonal and
    2H - 1 on it, so f is bounded at both ends. Some statements of the representation
    integrate to 1 instead of s∧t; K_H(t, ·) vanishes beyond t, so s∧t is the effective limit.
    """
    _check_hurst(H)
    if s <= 0 or t <= 0:
        raise DomainError(f"covariance reconstruction needs s, t > 0, got s={s}, t={t}")
    m = min(s, t)
    beta = 2.0 * H - 1.0 if s == t else H - 0.5
    lo, hi = m * 1e-12, m * (1.0 - 1e-12)

    def smooth_part(r: float) -> float:
        rc = min(max(r, lo), hi)
        ks = kernel_exact(H, s, rc)
        kt = kernel_exact(H, t, rc)
        return float(ks * kt * rc ** (1.0 - 2.0 * H) * (m - rc) ** (-beta))

    result = integrate.quad(
        smooth_part,
        0.0,
        m,
        weight="alg",
        wvar=(2.0 * H - 1.0, beta),
        epsabs=0.0,
        epsrel=tol,
        limit=200,
        full_output=1,
    )
    if len(result) > 3:
        raise NumericalError(
            "covariance reconstruction quadrature did not converge",
            diagnostics={"H": H, "s": s, "t": t, "abserr": result[1]},
        )
    logger.debug(f"covariance_from_kernel H={H} s={s} t={t}: {result[0]!r} ± {result[1]:.1e}")
    return float(result[0])


def fbm_sample(H: float, grid: TimeGrid, driver: BrownianDriver) -> SamplePath:
    """
    B^H_{t_i} = Σ_{j<i} k_ij ΔB_j for every path of ``driver``.

    k_ij are the exact-kernel diffusion weights: midpoint values K_H(t_i, t_j + Δt/2) inside
    each row and variance-matching weights on the first and the last cell.

    Raises:
        DomainError: For H outside (0, 1) \\ {1/2}
        ParameterError: If the driver lives on another grid
    """
    from svepath.kernels.fbm_exact import FbmExactKernel

    _check_hurst(H)
    if driver.grid != grid:
        raise ParameterError(
            f"driver grid (T={driver.grid.horizon}, n={driver.grid.n}) does not match "
            f"(T={grid.horizon}, n={grid.n})"
        )
    weights = FbmExactKernel(H=H).diffusion_weights(grid)
    values = driver.increments @ weights.T
    return SamplePath(grid=grid, values=values)
