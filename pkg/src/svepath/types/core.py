from __future__ import annotations

"""Core type definitions: grids, drivers, paths and quadrature records."""

from enum import Enum
from typing import Any, Protocol, runtime_checkable

import numpy as np
from numpy.typing import ArrayLike, NDArray
from pydantic import Field, field_validator, model_validator

from svepath.exceptions import ParameterError
from svepath.types.base import ArrayModel, SvepathModel

FloatArray = NDArray[np.float64]


def frozen_array(value: ArrayLike) -> FloatArray:
    """Return a read-only float64 view of ``value``."""
    arr = np.asarray(value, dtype=np.float64)
    view = arr.view()
    view.flags.writeable = False
    return view


class KernelVariant(str, Enum):
    """Supported singular kernels."""

    POWER_LAW = "powerlaw"
    FBM_SIMPLE = "fbm-simple"
    FBM_EXACT = "fbm-exact"


@runtime_checkable
class SmoothFunction(Protocol):
    """Scalar function with analytic first and second derivatives."""

    def value(self, x: ArrayLike) -> FloatArray: ...

    def d1(self, x: ArrayLike) -> FloatArray: ...

    def d2(self, x: ArrayLike) -> FloatArray: ...


@runtime_checkable
class DomainFunction(SmoothFunction, Protocol):
    """Smooth function in the domain of Δ_θ, compactly supported in [-radius, radius]."""

    radius: float

    def delta_theta(self, x: ArrayLike) -> FloatArray: ...


class TimeGrid(SvepathModel):
    """Uniform grid t_i = i·T/n on [0, T]."""

    horizon: float = Field(gt=0)
    n: int = Field(ge=1)

    @property
    def dt(self) -> float:
        return self.horizon / self.n

    @property
    def nodes(self) -> FloatArray:
        t = np.arange(self.n + 1, dtype=np.float64) * self.horizon / self.n
        t[-1] = self.horizon
        return t

    def node_index(self, t: float) -> int:
        """Index of node time ``t``; refuses times between nodes."""
        idx = int(round(t / self.dt))
        if idx < 0 or idx > self.n or abs(idx * self.dt - t) > 1e-9 * self.horizon:
            raise ParameterError(
                f"t={t} is not a node of the grid (T={self.horizon}, n={self.n})",
                suggestion="Field values are only defined on grid nodes; interpolation is refused.",
            )
        return idx

    def refine(self, factor: int) -> TimeGrid:
        if factor < 1:
            raise ParameterError(f"refinement factor must be >= 1, got {factor}")
        return TimeGrid(horizon=self.horizon, n=self.n * factor)

    def dyadic_nodes(self, depth: int = 3) -> list[float]:
        """Node times T/2^depth, ..., T/2, T (requires 2^depth | n)."""
        if self.n % (2**depth) != 0:
            raise ParameterError(
                f"n={self.n} is not divisible by 2^{depth}",
                suggestion="Use a power-of-two number of steps.",
            )
        return [self.horizon / 2**k for k in range(depth, -1, -1)]


class SpatialGrid(ArrayModel):
    """Quadrature nodes and weights on [lo, hi]."""

    lo: float
    hi: float
    points: np.ndarray
    weights: np.ndarray

    @field_validator("points", "weights", mode="before")
    @classmethod
    def _as_array(cls, v: Any) -> FloatArray:
        return frozen_array(v)

    @model_validator(mode="after")
    def _check(self) -> SpatialGrid:
        if self.points.ndim != 1 or self.points.shape != self.weights.shape:
            raise ValueError("points and weights must be 1-D arrays of equal length")
        if self.points.size < 2 or np.any(np.diff(self.points) <= 0):
            raise ValueError("points must be strictly increasing")
        if np.any(self.weights <= 0):
            raise ValueError("weights must be positive")
        span = self.hi - self.lo
        if abs(float(self.weights.sum()) - span) > 1e-9 * span:
            raise ValueError(
                f"weights sum to {self.weights.sum()} but the span is {span}; "
                "the grid would not integrate constants exactly"
            )
        return self

    @classmethod
    def uniform(cls, lo: float, hi: float, n_nodes: int) -> SpatialGrid:
        """Trapezoid rule with ``n_nodes`` equispaced nodes including both ends."""
        if hi <= lo or n_nodes < 2:
            raise ParameterError(f"invalid uniform grid [{lo}, {hi}] with {n_nodes} nodes")
        points = np.linspace(lo, hi, n_nodes)
        h = (hi - lo) / (n_nodes - 1)
        weights = np.full(n_nodes, h)
        weights[0] = weights[-1] = h / 2
        return cls(lo=lo, hi=hi, points=points, weights=weights)

    @classmethod
    def offset(cls, lo: float, hi: float, n_cells: int) -> SpatialGrid:
        """Midpoint rule; with an even cell count on a symmetric span, 0 is never a node."""
        if hi <= lo or n_cells < 2:
            raise ParameterError(f"invalid offset grid [{lo}, {hi}] with {n_cells} cells")
        h = (hi - lo) / n_cells
        points = lo + (np.arange(n_cells) + 0.5) * h
        return cls(lo=lo, hi=hi, points=points, weights=np.full(n_cells, h))

    @classmethod
    def for_kernel(
        cls, theta: float, horizon: float, n_nodes: int = 4097, offset: bool = False
    ) -> SpatialGrid:
        """Default grid on ±8·T^α·max(1, θ), where p^θ_t concentrates at scale t^α."""
        alpha = 1.0 / (2.0 + theta)
        half = 8.0 * horizon**alpha * max(1.0, theta)
        if offset:
            return cls.offset(-half, half, 2 * (n_nodes // 2))
        return cls.uniform(-half, half, n_nodes)


class BrownianDriver(ArrayModel):
    """Gaussian increments ΔB_i ~ N(0, Δt) on a grid.

    ``increments`` has shape (n,) for one path or (n_paths, n) for an ensemble;
    row k of an ensemble is path ``first_path + k``.
    """

    seed: int | None = None
    grid: TimeGrid
    increments: np.ndarray
    first_path: int = 0

    @field_validator("increments", mode="before")
    @classmethod
    def _as_array(cls, v: Any) -> FloatArray:
        return frozen_array(v)

    @model_validator(mode="after")
    def _check(self) -> BrownianDriver:
        if self.increments.ndim not in (1, 2) or self.increments.shape[-1] != self.grid.n:
            raise ValueError(
                f"increments of shape {self.increments.shape} do not match a grid "
                f"with n={self.grid.n}"
            )
        return self

    @classmethod
    def from_seed(cls, seed: int, grid: TimeGrid, path: int = 0) -> BrownianDriver:
        """Single path ``path`` of the ensemble rooted at ``seed``."""
        from svepath.utils.seeding import path_generator

        rng = path_generator(seed, path)
        inc = rng.normal(0.0, np.sqrt(grid.dt), size=grid.n)
        return cls(seed=seed, grid=grid, increments=inc, first_path=path)

    @classmethod
    def ensemble(
        cls, seed: int, grid: TimeGrid, n_paths: int, first_path: int = 0
    ) -> BrownianDriver:
        """Paths ``first_path .. first_path + n_paths - 1``, each from its own sub-seed."""
        from svepath.utils.seeding import path_generator

        if n_paths < 1:
            raise ParameterError(f"n_paths must be >= 1, got {n_paths}")
        scale = np.sqrt(grid.dt)
        inc = np.empty((n_paths, grid.n))
        for row in range(n_paths):
            inc[row] = path_generator(seed, first_path + row).normal(0.0, scale, size=grid.n)
        return cls(seed=seed, grid=grid, increments=inc, first_path=first_path)

    @property
    def n_paths(self) -> int:
        return 1 if self.increments.ndim == 1 else int(self.increments.shape[0])

    @property
    def brownian_path(self) -> FloatArray:
        """B at the grid nodes, B_0 = 0."""
        zero = np.zeros(self.increments.shape[:-1] + (1,))
        return np.concatenate([zero, np.cumsum(self.increments, axis=-1)], axis=-1)

    def coarsen(self, factor: int) -> BrownianDriver:
        """Driver on the grid with n/factor steps; coarse increments sum fine ones."""
        if factor < 1 or self.grid.n % factor != 0:
            raise ParameterError(f"cannot coarsen n={self.grid.n} by a factor of {factor}")
        if factor == 1:
            return self
        shape = self.increments.shape[:-1] + (self.grid.n // factor, factor)
        coarse = self.increments.reshape(shape).sum(axis=-1)
        grid = TimeGrid(horizon=self.grid.horizon, n=self.grid.n // factor)
        return BrownianDriver(
            seed=self.seed, grid=grid, increments=coarse, first_path=self.first_path
        )

    def select(self, rows: slice) -> BrownianDriver:
        """Sub-ensemble of rows (paths keep their indices)."""
        if self.increments.ndim == 1:
            raise ParameterError("cannot select rows from a single-path driver")
        start = rows.start or 0
        return BrownianDriver(
            seed=self.seed,
            grid=self.grid,
            increments=self.increments[rows],
            first_path=self.first_path + start,
        )


class SamplePath(ArrayModel):
    """Trajectory values X_{t_i}, i = 0..n (last axis), possibly for many paths."""

    grid: TimeGrid
    values: np.ndarray

    @field_validator("values", mode="before")
    @classmethod
    def _as_array(cls, v: Any) -> FloatArray:
        return frozen_array(v)

    @model_validator(mode="after")
    def _check(self) -> SamplePath:
        if self.values.shape[-1] != self.grid.n + 1:
            raise ValueError(
                f"values of shape {self.values.shape} do not match a grid with n={self.grid.n}"
            )
        if not np.all(np.isfinite(self.values)):
            raise ValueError("sample path contains non-finite values")
        return self

    @property
    def times(self) -> FloatArray:
        return self.grid.nodes

    @property
    def n_paths(self) -> int:
        return 1 if self.values.ndim == 1 else int(self.values.shape[0])

    def at(self, t: float) -> FloatArray:
        """Values at node time ``t``."""
        return np.asarray(self.values[..., self.grid.node_index(t)])

    def history(self, index: int) -> FloatArray:
        """Values at nodes 0..index (the path restricted to [0, t_index])."""
        return np.asarray(self.values[..., : index + 1])


class QuadratureResult(SvepathModel):
    """Quadrature value with truncation diagnostics."""

    value: float
    tail_mass: float
    truncated: bool
    metadata: dict[str, Any] = Field(default_factory=dict)
