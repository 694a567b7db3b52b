"""θ-heat kernel p^θ_t, its normalization c_θ, the operator Δ_θ and the semigroup S^θ_t.

With θ = 1/α − 2 the kernel

    p^θ_t(x) = c_θ t^{-α} exp(-|x|^{2+θ} / (2t))

is the fundamental solution of ∂_t u = Δ_θ u, Δ_θ = (2/(2+θ)²) ∂_x(|x|^{-θ} ∂_x), and
(1/c_θ) p^θ_t(0) = t^{-α} is the power-law Volterra kernel.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Callable
from functools import lru_cache
from typing import Any, NamedTuple

import numpy as np
from numpy.typing import ArrayLike
from pydantic import Field, model_validator
from scipy import integrate, special

from svepath.exceptions import DomainError, NumericalError, ParameterError
from svepath.types.base import SvepathModel
from svepath.types.core import FloatArray, QuadratureResult, SmoothFunction, SpatialGrid

logger = logging.getLogger(__name__)

DEFAULT_TOL = 1e-12


def _tail_cutoff(q: float, tol: float) -> float:
    """X ≥ 1 with ∫_X^∞ exp(-x^q/2) dx ≤ 2 exp(-X^q/2) / X^{q-1} < tol/10."""
    x_max = 1.0
    while 2.0 * math.exp(-(x_max**q) / 2.0) / x_max ** (q - 1.0) >= tol / 10.0:
        x_max *= 1.25
    return x_max


def _quad_checked(
    func: Callable[[float], float], upper: float, epsabs: float, what: str
) -> tuple[float, float]:
    result = integrate.quad(func, 0.0, upper, epsabs=epsabs, epsrel=0.0, limit=400, full_output=1)
    value, abserr = float(result[0]), float(result[1])
    if len(result) > 3:
        raise NumericalError(
            f"adaptive quadrature for {what} did not converge",
            diagnostics={
                "upper": upper,
                "abserr": abserr,
                "subintervals": result[2].get("last"),
                "message": str(result[3]).splitlines()[0],
            },
            suggestion="Loosen the tolerance.",
        )
    return value, abserr


@lru_cache(maxsize=128)
def compute_c_theta(theta: float, tol: float = DEFAULT_TOL) -> float:
    """
    Normalization constant c_θ = 1 / ∫_ℝ exp(-|x|^{2+θ}/2) dx.

    The integral is taken on [0, X_max] by adaptive Gauss-Kronrod (QUADPACK) and doubled.
    X_max comes from the tail bound x^q ≥ X^{q-1} x for x ≥ X ≥ 1.

    Args:
        theta: θ > 0
        tol: Bound on |c · ∫ exp(-|x|^{2+θ}/2) dx - 1|

    Returns:
        c_θ

    Raises:
        ParameterError: If theta or tol is not positive
        NumericalError: If the quadrature does not reach the tolerance
    """
    if not theta > 0:
        raise ParameterError(f"theta must be positive, got {theta}")
    if not tol > 0:
        raise ParameterError(f"tol must be positive, got {tol}")
    q = 2.0 + theta
    x_max = _tail_cutoff(q, tol)
    half, abserr = _quad_checked(
        lambda x: math.exp(-(x**q) / 2.0), x_max, tol / 20.0, f"c_theta(theta={theta})"
    )
    total = 2.0 * half
    logger.debug(f"c_theta: theta={theta} x_max={x_max:.3f} integral={total!r} abserr={abserr}")
    return 1.0 / total


def c_theta_closed_form(theta: float) -> float:
    """c_θ = (2+θ) / (2 · 2^{1/(2+θ)} · Γ(1/(2+θ)))."""
    if not theta > 0:
        raise ParameterError(f"theta must be positive, got {theta}")
    q = 2.0 + theta
    return float(q / (2.0 * 2.0 ** (1.0 / q) * special.gamma(1.0 / q)))


class ThetaHeatKernel(SvepathModel):
    """θ-heat kernel parameters; build with :meth:`from_theta` or :meth:`from_alpha`."""

    theta: float = Field(gt=0)
    alpha: float = Field(gt=0, lt=0.5)
    c_theta: float = Field(gt=0)

    @model_validator(mode="after")
    def _check_exponents(self) -> ThetaHeatKernel:
        if abs(self.alpha * (2.0 + self.theta) - 1.0) > 1e-12:
            raise ValueError(
                f"alpha={self.alpha} and theta={self.theta} violate alpha * (2 + theta) = 1"
            )
        return self

    @classmethod
    def from_theta(cls, theta: float, tol: float = DEFAULT_TOL) -> ThetaHeatKernel:
        c = compute_c_theta(theta, tol)
        return cls(theta=theta, alpha=1.0 / (2.0 + theta), c_theta=c)

    @classmethod
    def from_alpha(cls, alpha: float, tol: float = DEFAULT_TOL) -> ThetaHeatKernel:
        """Kernel whose trace is (t-s)^{-alpha}; ``alpha`` is stored as given."""
        if not 0.0 < alpha < 0.5:
            raise ParameterError(f"alpha must lie in (0, 1/2), got {alpha}")
        theta = 1.0 / alpha - 2.0
        return cls(theta=theta, alpha=alpha, c_theta=compute_c_theta(theta, tol))

    @property
    def q(self) -> float:
        """Exponent 2 + θ of the stretched exponential."""
        return 2.0 + self.theta


class KernelDerivatives(NamedTuple):
    dt: Any
    dx: Any
    delta_theta: Any


def _shape_like(values: FloatArray, x: ArrayLike) -> Any:
    return float(values) if np.ndim(x) == 0 else values


def heat_kernel_eval(k: ThetaHeatKernel, t: float, x: ArrayLike) -> Any:
    """
    p^θ_t(x) = c_θ t^{-α} exp(-|x|^{2+θ}/(2t)).

    Raises:
        DomainError: At t = 0, where the kernel is the Dirac mass at 0
        ParameterError: For t < 0
    """
    if t < 0:
        raise ParameterError(f"time must be non-negative, got t={t}")
    if t == 0:
        raise DomainError(
            "p_0 is the Dirac mass and cannot be evaluated pointwise",
            suggestion="Use point evaluation at x = 0 (the Dirac reduction) instead.",
        )
    xa = np.asarray(x, dtype=np.float64)
    values = k.c_theta * t ** (-k.alpha) * np.exp(-(np.abs(xa) ** k.q) / (2.0 * t))
    return _shape_like(values, x)


def heat_kernel_derivatives(k: ThetaHeatKernel, t: float, x: ArrayLike) -> KernelDerivatives:
    """∂_t p, ∂_x p and Δ_θ p in closed form.

    Δ_θ p simplifies to p·(|x|^q/(2t²) − 1/(q t)), continuous at x = 0; with 1/q = α this is
    ∂_t p term for term.
    """
    if t <= 0:
        raise DomainError(f"kernel derivatives need t > 0, got t={t}")
    xa = np.asarray(x, dtype=np.float64)
    p = np.asarray(heat_kernel_eval(k, t, xa))
    ax = np.abs(xa)
    u = ax**k.q
    rate = u / (2.0 * t * t) - k.alpha / t
    dt = p * rate
    dx = -p * k.q * ax ** (k.q - 1.0) * np.sign(xa) / (2.0 * t)
    lap = p * rate
    return KernelDerivatives(_shape_like(dt, x), _shape_like(dx, x), _shape_like(lap, x))


def delta_theta_apply(theta: float, f: SmoothFunction, x: ArrayLike) -> Any:
    """
    Δ_θ f(x) = (2/(2+θ)²)(−θ|x|^{−θ−1} sgn(x) f'(x) + |x|^{−θ} f''(x)).

    Raises:
        DomainError: If any x is 0, where |x|^{-θ} is singular
    """
    if not theta > 0:
        raise ParameterError(f"theta must be positive, got {theta}")
    xa = np.asarray(x, dtype=np.float64)
    if np.any(xa == 0.0):
        raise DomainError(
            "Δ_θ has a singular coefficient at x = 0",
            suggestion="Evaluate off 0 or use the function's continuous extension.",
        )
    ax = np.abs(xa)
    q = 2.0 + theta
    first = -theta * ax ** (-theta - 1.0) * np.sign(xa) * np.asarray(f.d1(xa))
    second = ax ** (-theta) * np.asarray(f.d2(xa))
    return _shape_like((2.0 / (q * q)) * (first + second), x)


def _evaluate(phi: Callable[[FloatArray], Any] | SmoothFunction, y: FloatArray) -> FloatArray:
    if isinstance(phi, SmoothFunction):
        return np.asarray(phi.value(y), dtype=np.float64)
    return np.broadcast_to(np.asarray(phi(y), dtype=np.float64), y.shape)


def semigroup_apply(
    k: ThetaHeatKernel,
    t: float,
    phi: Callable[[FloatArray], Any] | SmoothFunction,
    x: float,
    grid: SpatialGrid,
    tol: float = 1e-8,
) -> QuadratureResult:
    """
    (S^θ_t φ)(x) = ∫ p^θ_t(x − y) φ(y) dy by the grid's quadrature rule.

    The kernel mass missing from the grid, 1 − Σ w p_t(x − y), is reported as
    ``tail_mass``; ``truncated`` is set when it exceeds ``tol``.
    """
    y = grid.points
    kern = np.asarray(heat_kernel_eval(k, t, x - y))
    weighted = grid.weights * kern
    value = float(np.dot(weighted, _evaluate(phi, y)))
    tail = abs(1.0 - float(weighted.sum()))
    truncated = tail > tol
    if truncated:
        logger.warning(
            f"semigroup_apply: grid [{grid.lo:.3g}, {grid.hi:.3g}] misses kernel mass "
            f"{tail:.3e} at t={t}, x={x}"
        )
    return QuadratureResult(
        value=value,
        tail_mass=tail,
        truncated=truncated,
        metadata={"t": t, "x": x, "nodes": int(y.size)},
    )


def total_mass(k: ThetaHeatKernel, t: float, tol: float = 1e-10) -> float:
    """∫_ℝ p^θ_t(x) dx by adaptive quadrature (equals 1 analytically)."""
    if t <= 0:
        raise DomainError(f"total mass needs t > 0, got t={t}")
    upper = t**k.alpha * _tail_cutoff(k.q, tol)
    half, _ = _quad_checked(
        lambda x: float(heat_kernel_eval(k, t, x)), upper, tol / 20.0, f"mass of p_{t}"
    )
    return 2.0 * half


def semigroup_deviation(
    k: ThetaHeatKernel, t: float, s: float, xs: ArrayLike, grid: SpatialGrid
) -> float:
    """Measured max_x |(S_t p_s)(x) − p_{t+s}(x)| over the probe points ``xs``.

    Δ_θ is not translation invariant, so the convolution semigroup law is not exact;
    this reports how far it is from holding.
    """

    def p_s(y: FloatArray) -> Any:
        return heat_kernel_eval(k, s, y)

    worst = 0.0
    for x in np.atleast_1d(np.asarray(xs, dtype=np.float64)):
        conv = semigroup_apply(k, t, p_s, float(x), grid).value
        worst = max(worst, abs(conv - float(heat_kernel_eval(k, t + s, x))))
    logger.debug(f"semigroup deviation theta={k.theta} t={t} s={s}: {worst:.3e}")
    return worst
