from __future__ import annotations

"""Smooth test functions with analytic derivatives.

- :class:`ThetaBump` is exp(-1/(1-u)) in u = (|x|/c)^{2+θ}; it lies in the domain of Δ_θ and
  its Δ_θ is continuous at 0.
- :class:`QuadraticBump` is exp(-1/(1-(x/c)²)); Δ_θ of it is only available off 0.
- :class:`HeatKernelFunction` wraps p^θ_t as a function of x.
"""

import math
from typing import Any

import numpy as np
from numpy.typing import ArrayLike
from pydantic import Field

from svepath.theta_kernel import ThetaHeatKernel, heat_kernel_derivatives, heat_kernel_eval
from svepath.types.base import SvepathModel
from svepath.types.core import FloatArray


def _bump_profile(u: FloatArray) -> tuple[FloatArray, FloatArray, FloatArray]:
    """Φ(u) = exp(-1/(1-u)) with Φ' and Φ'' on u < 1, zero elsewhere."""
    inside = u < 1.0
    g = np.where(inside, 1.0 - u, 1.0)
    phi = np.where(inside, np.exp(-1.0 / g), 0.0)
    d1 = np.where(inside, -phi / g**2, 0.0)
    d2 = np.where(inside, phi * (1.0 / g**4 - 2.0 / g**3), 0.0)
    return phi, d1, d2


def _out(values: FloatArray, x: ArrayLike) -> Any:
    return float(values) if np.ndim(x) == 0 else values


class QuadraticBump(SvepathModel):
    """exp(-1/(1 - ((x - center)/c)²)) on |x - center| < c."""

    c: float = Field(gt=0)
    center: float = 0.0

    @property
    def radius(self) -> float:
        return abs(self.center) + self.c

    def _parts(self, x: ArrayLike) -> tuple[FloatArray, FloatArray, FloatArray, FloatArray]:
        s = (np.asarray(x, dtype=np.float64) - self.center) / self.c
        inside = np.abs(s) < 1.0
        g = np.where(inside, 1.0 - s * s, 1.0)
        phi = np.where(inside, np.exp(-1.0 / g), 0.0)
        return s, g, phi, inside

    def value(self, x: ArrayLike) -> Any:
        _, _, phi, _ = self._parts(x)
        return _out(phi, x)

    def d1(self, x: ArrayLike) -> Any:
        s, g, phi, inside = self._parts(x)
        return _out(np.where(inside, phi * (-2.0 * s / g**2) / self.c, 0.0), x)

    def d2(self, x: ArrayLike) -> Any:
        s, g, phi, inside = self._parts(x)
        inner = 4.0 * s * s / g**4 - 2.0 / g**2 - 8.0 * s * s / g**3
        return _out(np.where(inside, phi * inner / self.c**2, 0.0), x)


class ThetaBump(SvepathModel):
    """
    Test function φ(x) = Φ((|x|/c)^{2+θ}), Φ(u) = exp(-1/(1-u)), supported in [-c, c].

    With q = 2 + θ, |x|^{-θ} φ'(x) = (q/c^q) x Φ'(u), so

        Δ_θ φ(x) = (2/(q c^q)) (Φ'(u) + q u Φ''(u)),

    which is smooth in u and therefore continuous at x = 0 with value (2/(q c^q)) Φ'(0).
    """

    theta: float = Field(gt=0)
    c: float = Field(gt=0)

    @property
    def radius(self) -> float:
        return self.c

    @property
    def q(self) -> float:
        return 2.0 + self.theta

    def _u(self, x: ArrayLike) -> tuple[FloatArray, FloatArray]:
        xa = np.asarray(x, dtype=np.float64)
        return xa, (np.abs(xa) / self.c) ** self.q

    def value(self, x: ArrayLike) -> Any:
        _, u = self._u(x)
        return _out(_bump_profile(u)[0], x)

    def d1(self, x: ArrayLike) -> Any:
        xa, u = self._u(x)
        _, p1, _ = _bump_profile(u)
        du = self.q * np.abs(xa) ** (self.q - 1.0) * np.sign(xa) / self.c**self.q
        return _out(p1 * du, x)

    def d2(self, x: ArrayLike) -> Any:
        xa, u = self._u(x)
        _, p1, p2 = _bump_profile(u)
        ax = np.abs(xa)
        du = self.q * ax ** (self.q - 1.0) / self.c**self.q
        ddu = self.q * (self.q - 1.0) * ax ** (self.q - 2.0) / self.c**self.q
        return _out(p2 * du * du + p1 * ddu, x)

    def delta_theta(self, x: ArrayLike) -> Any:
        _, u = self._u(x)
        _, p1, p2 = _bump_profile(u)
        scale = 2.0 / (self.q * self.c**self.q)
        return _out(scale * (p1 + self.q * u * p2), x)


class HeatKernelFunction(SvepathModel):
    """x ↦ p^θ_t(x) at a fixed time t, with Δ_θ p_t = ∂_t p_t."""

    kernel: ThetaHeatKernel
    t: float = Field(gt=0)

    @property
    def theta(self) -> float:
        return self.kernel.theta

    @property
    def radius(self) -> float:
        """Distance beyond which p_t(x) < 1e-16 · p_t(0)."""
        return (74.0 * self.t) ** (1.0 / self.kernel.q)

    def value(self, x: ArrayLike) -> Any:
        return heat_kernel_eval(self.kernel, self.t, x)

    def d1(self, x: ArrayLike) -> Any:
        return heat_kernel_derivatives(self.kernel, self.t, x).dx

    def d2(self, x: ArrayLike) -> Any:
        xa = np.asarray(x, dtype=np.float64)
        q, t = self.kernel.q, self.t
        ax = np.abs(xa)
        p = np.asarray(heat_kernel_eval(self.kernel, t, xa))
        slope = q * ax ** (q - 1.0) / (2.0 * t)
        curvature = q * (q - 1.0) * ax ** (q - 2.0) / (2.0 * t)
        return _out(p * (slope * slope - curvature), x)

    def delta_theta(self, x: ArrayLike) -> Any:
        return heat_kernel_derivatives(self.kernel, self.t, x).delta_theta

    def at_zero(self) -> float:
        """p_t(0) = c_θ t^{-α}."""
        return self.kernel.c_theta * math.pow(self.t, -self.kernel.alpha)
