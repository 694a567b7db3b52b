from __future__ import annotations

"""Type definitions for svepath."""

from svepath.types.base import ArrayModel, SvepathModel
from svepath.types.core import (
    BrownianDriver,
    DomainFunction,
    FloatArray,
    KernelVariant,
    QuadratureResult,
    SamplePath,
    SmoothFunction,
    SpatialGrid,
    TimeGrid,
    frozen_array,
)

__all__ = [
    "ArrayModel",
    "BrownianDriver",
    "DomainFunction",
    "FloatArray",
    "KernelVariant",
    "QuadratureResult",
    "SamplePath",
    "SmoothFunction",
    "SpatialGrid",
    "SvepathModel",
    "TimeGrid",
    "frozen_array",
]
