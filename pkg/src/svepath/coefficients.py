"""Hölder coefficients b, σ with regularity metadata, standard fixtures and mollification."""

from __future__ import annotations

import logging
import math
from collections.abc import Callable
from typing import Any

import numpy as np
from numpy.typing import ArrayLike
from pydantic import Field, model_validator

from svepath.exceptions import ParameterError, UnknownFixtureError
from svepath.types.base import ArrayModel
from svepath.types.core import FloatArray

logger = logging.getLogger(__name__)

# Mollifier lattice: nodes u = h·k with h = 1/(16m), so 33 nodes cover the support of ρ_m.
LATTICE_DIVISIONS = 16
_LATTICE_OFFSETS = np.arange(-LATTICE_DIVISIONS, LATTICE_DIVISIONS + 1, dtype=np.float64)


def _bump(y: FloatArray) -> FloatArray:
    """ρ(y) = (35/32)(1 - y²)³ on [-1, 1]."""
    return np.where(np.abs(y) < 1.0, (35.0 / 32.0) * (1.0 - y * y) ** 3, 0.0)


class HolderCoefficient(ArrayModel):
    """
    Coefficient f(t, x) with |f(t, x) - f(t, y)| ≤ L|x - y|^γ and |f(t, x)| ≤ L(1 + |x|).

    ``func`` must accept a float time and an array of states and return an array of the
    same shape.
    """

    func: Callable[[float, Any], Any]
    gamma: float = Field(gt=0, le=1)
    lipschitz: float = Field(ge=0)
    decreasing_in_x: bool = False
    name: str = "f"

    def __call__(self, t: float, x: ArrayLike) -> Any:
        xa = np.asarray(x, dtype=np.float64)
        values = np.broadcast_to(np.asarray(self.func(t, xa), dtype=np.float64), xa.shape)
        return float(values) if values.ndim == 0 else values

    def scaled(self, factor: float) -> HolderCoefficient:
        """factor·f with constants scaled accordingly."""
        if factor <= 0:
            raise ParameterError(f"scale factor must be positive, got {factor}")
        base = self.func
        return HolderCoefficient(
            func=lambda t, x: factor * np.asarray(base(t, x), dtype=np.float64),
            gamma=self.gamma,
            lipschitz=factor * self.lipschitz,
            decreasing_in_x=self.decreasing_in_x,
            name=f"{factor:g}*{self.name}",
        )


class CoefficientPair(ArrayModel):
    """Drift b and diffusion σ; σ must be at least 1/2-Hölder."""

    name: str
    b: HolderCoefficient
    sigma: HolderCoefficient
    monotone_drift: bool = True

    @model_validator(mode="after")
    def _check_regularity(self) -> CoefficientPair:
        if self.sigma.gamma < 0.5:
            raise ValueError(
                f"diffusion Hölder exponent must be >= 1/2, got {self.sigma.gamma}"
            )
        if self.monotone_drift and not self.b.decreasing_in_x:
            raise ValueError(
                f"pair '{self.name}' requires a monotone drift but its drift is not "
                "declared decreasing in x"
            )
        return self

    @property
    def is_lipschitz(self) -> bool:
        """Both coefficients are Lipschitz (γ = 1)."""
        return self.b.gamma == 1.0 and self.sigma.gamma == 1.0


def _zero(t: float, x: FloatArray) -> FloatArray:
    return np.zeros_like(x)


def _one(t: float, x: FloatArray) -> FloatArray:
    return np.ones_like(x)


def _minus_x(t: float, x: FloatArray) -> FloatArray:
    return -x


def _minus_sqrt(t: float, x: FloatArray) -> FloatArray:
    return -np.sign(x) * np.sqrt(np.abs(x))


def _flattened_sqrt(t: float, x: FloatArray) -> FloatArray:
    return np.sqrt(0.5 + np.minimum(np.abs(x), 4.0))


def _minus_tanh(t: float, x: FloatArray) -> FloatArray:
    return -np.tanh(x)


def standard_examples() -> list[CoefficientPair]:
    """
    Coefficient fixtures satisfying the Hölder hypotheses.

    - ``lipschitz``: b = -x, σ = 1
    - ``holder``: b = -sgn(x)|x|^{1/2}, σ = (1/2 + min(|x|, 4))^{1/2}
    - ``degenerate``: b = -x, σ = 0
    - ``brownian``: b = 0, σ = 1
    - ``zero``: b = σ = 0
    - ``drift_only``: b = -tanh(x), σ = 0
    """
    minus_x = HolderCoefficient(
        func=_minus_x, gamma=1.0, lipschitz=1.0, decreasing_in_x=True, name="-x"
    )
    zero = HolderCoefficient(func=_zero, gamma=1.0, lipschitz=0.0, decreasing_in_x=True, name="0")
    one = HolderCoefficient(func=_one, gamma=1.0, lipschitz=1.0, name="1")
    return [
        CoefficientPair(name="lipschitz", b=minus_x, sigma=one),
        CoefficientPair(
            name="holder",
            b=HolderCoefficient(
                func=_minus_sqrt,
                gamma=0.5,
                lipschitz=math.sqrt(2.0),
                decreasing_in_x=True,
                name="-sgn(x)|x|^0.5",
            ),
            sigma=HolderCoefficient(
                func=_flattened_sqrt, gamma=0.5, lipschitz=1.0, name="(0.5+min(|x|,4))^0.5"
            ),
        ),
        CoefficientPair(name="degenerate", b=minus_x, sigma=zero),
        CoefficientPair(name="brownian", b=zero, sigma=one),
        CoefficientPair(name="zero", b=zero, sigma=zero),
        CoefficientPair(
            name="drift_only",
            b=HolderCoefficient(
                func=_minus_tanh, gamma=1.0, lipschitz=1.0, decreasing_in_x=True, name="-tanh(x)"
            ),
            sigma=zero,
        ),
    ]


def get_fixture(name: str) -> CoefficientPair:
    """Look up a fixture from :func:`standard_examples` by name."""
    fixtures = {pair.name: pair for pair in standard_examples()}
    try:
        return fixtures[name]
    except KeyError:
        raise UnknownFixtureError(name, list(fixtures)) from None


def mollify(f: HolderCoefficient, m: int) -> HolderCoefficient:
    """
    Lipschitz approximant f^m of a Hölder coefficient.

    f^m(t, x) = Σ_u f(t, u) ρ(m(x - u)) / Σ_u ρ(m(x - u)) over the lattice u ∈ ℤ/(16m), where
    ρ(y) = (35/32)(1 - y²)³. Only lattice points within 1/m of x carry weight, so f^m is a
    convex combination of values of f near x: sup|f^m - f| ≤ L m^{-γ}, growth and
    monotonicity carry over, and affine f are reproduced up to the lattice moment error.
    The declared Lipschitz constant is max(2.5·2^γ·L·m^{1-γ}, L(1 + 1/m)).

    Raises:
        ParameterError: If m < 1
    """
    if m < 1:
        raise ParameterError(f"mollification index must be >= 1, got {m}")
    h = 1.0 / (LATTICE_DIVISIONS * m)
    base = f.func

    def smoothed(t: float, x: Any) -> FloatArray:
        xa = np.asarray(x, dtype=np.float64)
        anchor = np.floor(xa / h)
        nodes = h * (anchor[..., None] + _LATTICE_OFFSETS)
        weights = _bump(m * (xa[..., None] - nodes))
        values = np.asarray(base(t, nodes), dtype=np.float64)
        return np.asarray((values * weights).sum(axis=-1) / weights.sum(axis=-1))

    lipschitz = max(
        2.5 * 2.0**f.gamma * f.lipschitz * m ** (1.0 - f.gamma), f.lipschitz * (1.0 + 1.0 / m)
    )
    logger.debug(f"mollify {f.name} at m={m}: declared Lipschitz constant {lipschitz:.4g}")
    return HolderCoefficient(
        func=smoothed,
        gamma=1.0,
        lipschitz=lipschitz,
        decreasing_in_x=f.decreasing_in_x,
        name=f"{f.name}^{m}",
    )


def mollify_pair(pair: CoefficientPair, m: int) -> CoefficientPair:
    return CoefficientPair(
        name=f"{pair.name}^{m}",
        b=mollify(pair.b, m),
        sigma=mollify(pair.sigma, m),
        monotone_drift=pair.monotone_drift,
    )


def scale_coefficients(pair: CoefficientPair, factor: float) -> CoefficientPair:
    """(factor·b, factor·σ): the coefficients that absorb a kernel scale constant."""
    return CoefficientPair(
        name=f"{factor:g}*{pair.name}",
        b=pair.b.scaled(factor),
        sigma=pair.sigma.scaled(factor),
        monotone_drift=pair.monotone_drift,
    )
