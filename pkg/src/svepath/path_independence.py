"""Path-independent additive functionals of SVE solutions and of their field pairings.

An additive functional

    f_{s,t} = ∫_s^t g₁(r, X_{[0,r]}, X_r) dr + ∫_s^t g₂(r, X_{[0,r]}, X_r) dB_r

is path independent when f_{s,t} = v(t, X_t) - v(s, X_s). For the scalar semimartingale
Z_r = ⟨X_r, φ⟩ this holds exactly when (g₁, g₂) come from v through Itô's formula; the
checks here build such pairs, scan their defects on probe grids and measure the pathwise
gap on simulated paths.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Callable, Sequence
from pathlib import Path
from typing import Any

import numpy as np
from numpy.typing import ArrayLike
from pydantic import Field, model_validator

from svepath.bumps import HeatKernelFunction
from svepath.coefficients import CoefficientPair, scale_coefficients
from svepath.exceptions import ParameterError
from svepath.fbm_kernels import FbmParams
from svepath.kernels.base import SingularKernel
from svepath.kernels.power_law import FbmSimpleKernel
from svepath.spde_field import FieldSolution, pairing_series
from svepath.sve_engine import InitialCurve, euler_solve
from svepath.theta_kernel import ThetaHeatKernel, compute_c_theta
from svepath.types.base import ArrayModel
from svepath.types.core import (
    BrownianDriver,
    DomainFunction,
    FloatArray,
    SamplePath,
    SmoothFunction,
    TimeGrid,
)
from svepath.utils.csv_io import format_float, write_records

logger = logging.getLogger(__name__)

FieldFunc = Callable[[Any, Any], Any]
GFunc = Callable[[float, FloatArray, Any], Any]
Modulation = tuple[Callable[[FloatArray], Any], Callable[[FloatArray], Any]]

Z_PROBES = 41
Z_MARGIN = 0.2


# ============================================================================
# Candidate fields v(t, z)
# ============================================================================


class CandidateV(ArrayModel):
    """v(t, z) with analytic ∂_t v, ∂_z v, ∂²_z v; ``bound`` is set for C^{1,2}_b fields."""

    name: str
    v: FieldFunc
    dt_v: FieldFunc
    dz_v: FieldFunc
    dzz_v: FieldFunc
    bound: float | None = Field(default=None, gt=0)

    @property
    def bounded(self) -> bool:
        return self.bound is not None

    @classmethod
    def constant(cls, value: float = 1.0) -> CandidateV:
        def zero(t: Any, z: Any) -> Any:
            return np.zeros(np.broadcast(np.asarray(t), np.asarray(z)).shape)

        def const(t: Any, z: Any) -> Any:
            return np.full(np.broadcast(np.asarray(t), np.asarray(z)).shape, value)

        return cls(
            name=f"constant({value:g})",
            v=const,
            dt_v=zero,
            dz_v=zero,
            dzz_v=zero,
            bound=max(abs(value), 1.0),
        )

    @classmethod
    def identity(cls) -> CandidateV:
        """v(t, z) = z (unbounded)."""

        def shape_of(t: Any, z: Any) -> tuple[int, ...]:
            return np.broadcast(np.asarray(t), np.asarray(z)).shape

        return cls(
            name="identity",
            v=lambda t, z: np.broadcast_to(np.asarray(z, dtype=np.float64), shape_of(t, z)),
            dt_v=lambda t, z: np.zeros(shape_of(t, z)),
            dz_v=lambda t, z: np.ones(shape_of(t, z)),
            dzz_v=lambda t, z: np.zeros(shape_of(t, z)),
        )

    @classmethod
    def damped_sine(cls) -> CandidateV:
        """v(t, z) = e^{-t} sin z; bounded by 1 for t ≥ 0."""
        return cls(
            name="damped_sine",
            v=lambda t, z: np.exp(-np.asarray(t)) * np.sin(z),
            dt_v=lambda t, z: -np.exp(-np.asarray(t)) * np.sin(z),
            dz_v=lambda t, z: np.exp(-np.asarray(t)) * np.cos(z),
            dzz_v=lambda t, z: -np.exp(-np.asarray(t)) * np.sin(z),
            bound=1.0,
        )


def candidate_fixtures() -> dict[str, CandidateV]:
    fixtures = [CandidateV.constant(), CandidateV.identity(), CandidateV.damped_sine()]
    return {"constant": fixtures[0], "identity": fixtures[1], "damped_sine": fixtures[2]}


def get_candidate(name: str) -> CandidateV:
    fixtures = candidate_fixtures()
    if name not in fixtures:
        raise ParameterError(
            f"unknown candidate field '{name}'",
            suggestion=f"Available candidates: {', '.join(sorted(fixtures))}",
        )
    return fixtures[name]


# ============================================================================
# Additive functionals
# ============================================================================


class AdditiveFunctional(ArrayModel):
    """
    Integrands g₁, g₂ of an additive functional.

    Both are called as ``g(r, history, z)`` where ``history`` holds the path at nodes up to
    r only (last entry X_r), so they cannot look ahead.
    """

    g1: GFunc
    g2: GFunc
    name: str = "f"
    grid: TimeGrid | None = None

    def evaluate(self, path: SamplePath, index: int, z: ArrayLike) -> tuple[Any, Any]:
        """(g₁, g₂) at node ``index`` of ``path``."""
        r = float(path.grid.nodes[index])
        history = path.history(index)
        return self.g1(r, history, z), self.g2(r, history, z)

    def perturbed(self, eps1: float = 0.0, eps2: float = 0.0) -> AdditiveFunctional:
        """(g₁ + ε₁, g₂ + ε₂)."""
        g1, g2 = self.g1, self.g2
        return AdditiveFunctional(
            g1=lambda r, h, z: np.asarray(g1(r, h, z)) + eps1,
            g2=lambda r, h, z: np.asarray(g2(r, h, z)) + eps2,
            name=f"{self.name}+({eps1:g},{eps2:g})",
            grid=self.grid,
        )


def constant_functional(g1: float, g2: float) -> AdditiveFunctional:
    def first(r: float, history: FloatArray, z: Any) -> Any:
        return np.full(np.shape(z), g1)

    def second(r: float, history: FloatArray, z: Any) -> Any:
        return np.full(np.shape(z), g2)

    return AdditiveFunctional(g1=first, g2=second, name=f"const({g1:g},{g2:g})")


def ito_functional(
    af: AdditiveFunctional, path: SamplePath, driver: BrownianDriver, s: float, t: float
) -> Any:
    """
    Σ_{s ≤ t_j < t} g₁(t_j, X_{t_j}) Δt + g₂(t_j, X_{t_j}) ΔB_j, evaluated at z = X_{t_j}.

    Raises:
        ParameterError: If s ≥ t or path and driver live on different grids
    """
    if path.grid != driver.grid:
        raise ParameterError("path and driver must share the time grid")
    i_s, i_t = path.grid.node_index(s), path.grid.node_index(t)
    if i_s >= i_t:
        raise ParameterError(f"need s < t, got s={s}, t={t}")
    dt = path.grid.dt
    total: Any = 0.0
    for j in range(i_s, i_t):
        g1, g2 = af.evaluate(path, j, path.values[..., j])
        total = total + np.asarray(g1) * dt + np.asarray(g2) * driver.increments[..., j]
    return float(total) if np.ndim(total) == 0 else np.asarray(total)


def derive_g_from_v(
    v: CandidateV,
    coeffs: CoefficientPair,
    c_theta: float,
    path: SamplePath | None = None,
) -> AdditiveFunctional:
    """
    Integrands that make f_{s,t} path independent with respect to v:

        g₁(r, z) = ∂_r v + ½ ∂²_z v (σ(r, X_r)/c_θ)² + ∂_z v b(r, X_r)/c_θ
        g₂(r, z) = ∂_z v σ(r, X_r)/c_θ

    X_r is read from the history passed at evaluation time; ``path`` only fixes the grid.
    """
    if not c_theta > 0:
        raise ParameterError(f"c_theta must be positive, got {c_theta}")

    def g1(r: float, history: FloatArray, z: Any) -> Any:
        x_r = history[..., -1]
        diffusion = np.asarray(coeffs.sigma(r, x_r)) / c_theta
        drift = np.asarray(coeffs.b(r, x_r)) / c_theta
        return (
            v.dt_v(r, z) + 0.5 * v.dzz_v(r, z) * diffusion * diffusion + v.dz_v(r, z) * drift
        )

    def g2(r: float, history: FloatArray, z: Any) -> Any:
        x_r = history[..., -1]
        return v.dz_v(r, z) * np.asarray(coeffs.sigma(r, x_r)) / c_theta

    return AdditiveFunctional(
        g1=g1, g2=g2, name=f"g[{v.name}]", grid=path.grid if path is not None else None
    )


# ============================================================================
# Residual reports
# ============================================================================


class ResidualReport(ArrayModel):
    """
    Defects of the path-independence equations on an (r, z) probe grid, plus pathwise gaps.

    Defects are signed, lhs - g. ``pathwise_gap`` has one entry per pair, with a leading
    path axis for ensembles. ``refinement`` optionally holds (n, median gap) rows.
    """

    r: np.ndarray
    z: np.ndarray
    residual1: np.ndarray
    residual2: np.ndarray
    pairs: list[tuple[float, float]] = Field(default_factory=list)
    pathwise_gap: np.ndarray = Field(default_factory=lambda: np.zeros(0))
    refinement: list[tuple[int, float]] = Field(default_factory=list)
    label: str = ""

    @model_validator(mode="after")
    def _finite(self) -> ResidualReport:
        for name in ("residual1", "residual2", "pathwise_gap"):
            if not np.all(np.isfinite(getattr(self, name))):
                raise ValueError(f"{name} contains non-finite entries")
        return self

    def max_residual(self) -> float:
        return float(max(np.max(np.abs(self.residual1)), np.max(np.abs(self.residual2))))

    def median_gaps(self) -> FloatArray:
        """Gap per pair, median over paths."""
        gaps = np.asarray(self.pathwise_gap)
        if gaps.ndim <= 1:
            return gaps
        return np.asarray(np.median(gaps.reshape(-1, gaps.shape[-1]), axis=0))

    def median_gap(self) -> float:
        """Median over paths of the largest gap among the pairs."""
        gaps = np.asarray(self.pathwise_gap)
        if gaps.size == 0:
            return 0.0
        worst = gaps.reshape(-1, gaps.shape[-1]).max(axis=-1)
        return float(np.median(worst))

    def with_refinement(self, rows: Sequence[tuple[int, float]]) -> ResidualReport:
        return self.model_copy(update={"refinement": list(rows)})

    def summary(self) -> str:
        lines = [
            f"report: {self.label}" if self.label else "report",
            f"max_residual = {format_float(self.max_residual())}",
            f"max_residual1 = {format_float(float(np.max(np.abs(self.residual1))))}",
            f"max_residual2 = {format_float(float(np.max(np.abs(self.residual2))))}",
            f"median_residual = {format_float(float(np.median(np.abs(self.residual1))))}",
        ]
        if self.pairs:
            gaps = self.median_gaps()
            lines.append(f"max_pathwise_gap = {format_float(float(np.max(self.pathwise_gap)))}")
            lines.append(f"median_pathwise_gap = {format_float(self.median_gap())}")
            for (s, t), gap in zip(self.pairs, gaps, strict=True):
                lines.append(f"  gap[{s:g},{t:g}] = {format_float(float(gap))}")
        if self.refinement:
            lines.append("refinement (n, median gap):")
            for n, gap in self.refinement:
                lines.append(f"  {n} {format_float(gap)}")
        return "\n".join(lines) + "\n"

    def to_csv(self, path: str | Path) -> Path:
        """Long format ``kind,r,z,value``; gap rows carry (s, t) in the r and z columns."""
        rows: list[list[str | float]] = []
        for kind, values in (("residual1", self.residual1), ("residual2", self.residual2)):
            for i, r in enumerate(self.r):
                for j, z in enumerate(self.z):
                    rows.append([kind, float(r), float(z), float(values[i, j])])
        for (s, t), gap in zip(self.pairs, self.median_gaps(), strict=True):
            rows.append(["gap", s, t, float(gap)])
        return write_records(path, ["kind", "r", "z", "value"], rows)


def default_probes(values: FloatArray, count: int = Z_PROBES) -> FloatArray:
    """``count`` points over the range of ``values`` widened by 20%."""
    lo, hi = float(np.min(values)), float(np.max(values))
    span = hi - lo if hi > lo else 1.0
    return np.linspace(lo - Z_MARGIN * span / 2.0, hi + Z_MARGIN * span / 2.0, count)


def _probe_points(zprobes: ArrayLike | int | None, values: FloatArray) -> FloatArray:
    """Explicit probes, or that many (default 41) over the widened range of ``values``."""
    if zprobes is None:
        return default_probes(values)
    if isinstance(zprobes, int):
        if zprobes < 2:
            raise ParameterError(f"need at least 2 z-probes, got {zprobes}")
        return default_probes(values, zprobes)
    return np.atleast_1d(np.asarray(zprobes, dtype=np.float64))


def dyadic_pairs(grid: TimeGrid, depth: int = 3) -> list[tuple[float, float]]:
    """All s < t from {T/2^depth, ..., T/2, T}, with the depth lowered until it divides n."""
    while depth > 0 and grid.n % (2**depth) != 0:
        depth -= 1
    nodes = grid.dyadic_nodes(depth)
    if len(nodes) < 2:
        nodes = [0.0] + nodes
    return [(s, t) for i, s in enumerate(nodes) for t in nodes[i + 1 :]]


def _single_path(path: SamplePath) -> FloatArray:
    values = np.asarray(path.values)
    return values if values.ndim == 1 else values.reshape(-1, values.shape[-1])[0]


def residual_scan(
    v: CandidateV,
    af: AdditiveFunctional,
    coeffs: CoefficientPair,
    c_theta: float,
    path: SamplePath,
    zprobes: ArrayLike | int | None = None,
    driver: BrownianDriver | None = None,
    pairs: Sequence[tuple[float, float]] | None = None,
) -> ResidualReport:
    """
    Defects of

        ∂_r v + ½ ∂²_z v (σ(r, X_r)/c_θ)² + ∂_z v b(r, X_r)/c_θ = g₁(r, z)
        ∂_z v σ(r, X_r)/c_θ = g₂(r, z)

    at every node r and probe z, along the first path. With a driver, the pathwise gap
    |f_{s,t} - (v(t, X_t) - v(s, X_s))| is added for every pair (dyadic by default) and path.
    """
    grid = path.grid
    first = SamplePath(grid=grid, values=_single_path(path))
    z = _probe_points(zprobes, first.values)
    truth = derive_g_from_v(v, coeffs, c_theta)
    r_nodes = grid.nodes
    residual1 = np.empty((grid.n + 1, z.size))
    residual2 = np.empty((grid.n + 1, z.size))
    for i in range(grid.n + 1):
        lhs1, lhs2 = truth.evaluate(first, i, z)
        g1, g2 = af.evaluate(first, i, z)
        residual1[i] = np.asarray(lhs1) - np.asarray(g1)
        residual2[i] = np.asarray(lhs2) - np.asarray(g2)

    gap_pairs: list[tuple[float, float]] = []
    gaps = np.zeros(0)
    if driver is not None:
        gap_pairs = list(pairs) if pairs is not None else dyadic_pairs(grid)
        columns = []
        for s, t in gap_pairs:
            f = ito_functional(af, path, driver, s, t)
            change = np.asarray(v.v(t, path.at(t))) - np.asarray(v.v(s, path.at(s)))
            columns.append(np.abs(np.asarray(f) - change))
        gaps = np.stack(columns, axis=-1)
    logger.debug(f"residual_scan {af.name}: {grid.n + 1} nodes x {z.size} probes")
    return ResidualReport(
        r=r_nodes,
        z=z,
        residual1=residual1,
        residual2=residual2,
        pairs=gap_pairs,
        pathwise_gap=gaps,
        label=f"{v.name} / {coeffs.name}",
    )


def c_theta_for(kernel: SingularKernel) -> float:
    """c_θ of the θ-heat kernel whose trace is the kernel's singularity, θ = 1/α - 2."""
    return compute_c_theta(1.0 / kernel.singularity_exponent - 2.0)


def verify_path_independence(
    kernel: SingularKernel,
    v: CandidateV,
    coeffs: CoefficientPair,
    driver: BrownianDriver,
    x0: InitialCurve = 1.0,
    zprobes: ArrayLike | int | None = None,
    pairs: Sequence[tuple[float, float]] | None = None,
    scan_coeffs: CoefficientPair | None = None,
) -> ResidualReport:
    """
    Solve the SVE, derive (g₁, g₂) from v and scan the defects and pathwise gaps.

    ``scan_coeffs`` replaces ``coeffs`` in the path-independence equations (the solve
    always uses ``coeffs``).
    """
    path = euler_solve(kernel, coeffs, driver, x0)
    c_theta = c_theta_for(kernel)
    scan = scan_coeffs or coeffs
    af = derive_g_from_v(v, scan, c_theta, path)
    return residual_scan(v, af, scan, c_theta, path, zprobes, driver, pairs)


def fbm_verify(
    params: FbmParams,
    v: CandidateV,
    coeffs: CoefficientPair,
    driver: BrownianDriver,
    x0: InitialCurve = 1.0,
    zprobes: ArrayLike | int | None = None,
    pairs: Sequence[tuple[float, float]] | None = None,
) -> ResidualReport:
    """
    The fBm-driven equation X = g + ∫C(t-s)^{H-1/2}(b ds + σ dB) with the equations

        ∂_r v + ½ ∂²_z v (Cσ/c_θ)² + ∂_z v Cb/c_θ = g₁,    ∂_z v Cσ/c_θ = g₂.

    This is the generic pipeline for PowerLaw(1/2 - H) with (Cb, Cσ).
    """
    kernel = FbmSimpleKernel(H=params.H, C=params.C)
    scan = scale_coefficients(coeffs, params.C)
    return verify_path_independence(kernel, v, coeffs, driver, x0, zprobes, pairs, scan)


# ============================================================================
# Field-level functionals
# ============================================================================


def _ito_terms(v: CandidateV, r: float, z: Any, drift: Any, diffusion: Any) -> tuple[Any, Any]:
    """Itô drift and diffusion of V(r, Z_r) for dZ = drift dr + diffusion dB."""
    dz = v.dz_v(r, z)
    first = v.dt_v(r, z) + 0.5 * v.dzz_v(r, z) * diffusion * diffusion + dz * drift
    return np.asarray(first), np.asarray(dz * diffusion)


def verify_field_path_independence(
    v: CandidateV,
    phi: DomainFunction | SmoothFunction,
    sol: FieldSolution,
    pairs: Sequence[tuple[float, float]] | None = None,
    modulation: Modulation | None = None,
    g2_shift: float = 0.0,
    zprobes: ArrayLike | int | None = None,
) -> ResidualReport:
    """
    Path independence of the pairing Z_r = a(r)⟨X_r, φ⟩ with respect to V = v.

    Z is an Itô process with

        drift     a(r)(⟨X_r, Δ_θφ⟩ + b(r, X_r(0)) φ(0)/c_θ) + a'(r)⟨X_r, φ⟩
        diffusion a(r) σ(r, X_r(0)) φ(0)/c_θ,

    and G₁, G₂ are built from V through Itô's formula for Z. The first defect grid puts the
    drift the pairing actually realizes, (ΔZ_j - diffusion_j ΔB_j)/Δt on the first path, into
    Itô's formula and subtracts G₁, so at each z it equals ∂_z V(r_j, z) times the weak-form
    residual increment per unit time when a ≡ 1. The second grid holds the diffusion defect
    (zero, or -g2_shift). The report also holds the pathwise gaps
    |Σ G₁ Δt + Σ G₂ ΔB - (V(t, Z_t) - V(s, Z_s))|, which vanish under refinement when G comes
    from V. ``modulation`` is (a, a'), default a ≡ 1.
    """
    series = pairing_series(sol, phi)
    grid = sol.grid
    nodes = grid.nodes
    if modulation is None:
        a, da = np.ones(grid.n + 1), np.zeros(grid.n + 1)
    else:
        a = np.broadcast_to(np.asarray(modulation[0](nodes), dtype=np.float64), nodes.shape)
        da = np.broadcast_to(np.asarray(modulation[1](nodes), dtype=np.float64), nodes.shape)

    phi0 = series.phi_at_zero
    c = series.c_theta
    if phi0 == 0.0 and np.any(np.asarray(series.sigma) != 0.0):
        logger.warning(
            "verify_field_path_independence: φ(0) = 0 while σ is not identically zero; the pairing "
            "carries no noise and the check degenerates"
        )
    z_path = a * series.values
    drift = a[:-1] * (series.drift_pairings[..., :-1] + series.b * phi0 / c)
    drift = drift + da[:-1] * series.values[..., :-1]
    diffusion = a[:-1] * series.sigma * phi0 / c

    def integrands(j: int, z: Any, d: Any, s: Any) -> tuple[Any, Any]:
        """G₁, G₂ at node j, built from V through Itô's formula for Z."""
        g1, g2 = _ito_terms(v, float(nodes[j]), z, d, s)
        return g1, g2 + g2_shift

    gap_pairs = list(pairs) if pairs is not None else dyadic_pairs(grid)
    columns = []
    for s, t in gap_pairs:
        i_s, i_t = grid.node_index(s), grid.node_index(t)
        if i_s >= i_t:
            raise ParameterError(f"need s < t, got s={s}, t={t}")
        total: Any = 0.0
        for j in range(i_s, i_t):
            g1, g2 = integrands(j, z_path[..., j], drift[..., j], diffusion[..., j])
            total = total + g1 * grid.dt + g2 * series.increments[..., j]
        change = v.v(t, z_path[..., i_t]) - v.v(s, z_path[..., i_s])
        columns.append(np.abs(np.asarray(total) - np.asarray(change)))

    first = _single_path(SamplePath(grid=grid, values=z_path))
    z = _probe_points(zprobes, first)
    realized = (np.diff(z_path, axis=-1) - diffusion * series.increments) / grid.dt
    drift0 = drift.reshape(-1, grid.n)[0]
    realized0 = realized.reshape(-1, grid.n)[0]
    diffusion0 = diffusion.reshape(-1, grid.n)[0]
    residual1 = np.empty((grid.n, z.size))
    residual2 = np.empty((grid.n, z.size))
    for j in range(grid.n):
        lhs1, lhs2 = _ito_terms(v, float(nodes[j]), z, realized0[j], diffusion0[j])
        g1, g2 = integrands(j, z, drift0[j], diffusion0[j])
        residual1[j] = lhs1 - g1
        residual2[j] = lhs2 - g2
    return ResidualReport(
        r=nodes[:-1],
        z=z,
        residual1=residual1,
        residual2=residual2,
        pairs=gap_pairs,
        pathwise_gap=np.stack(columns, axis=-1),
        label=f"pairing {v.name} / {sol.coeffs.name}",
    )


def psi_m(k: ThetaHeatKernel, m: int) -> HeatKernelFunction:
    """
    ψ^m = p^θ_{m^{-1/α}}, with Δ_θψ^m = ∂_t p^θ_t at t = m^{-1/α}.

    ψ^m(0) = c_θ m, so ψ^m → δ_0 while its value at 0 grows linearly in m.
    """
    if m < 1:
        raise ParameterError(f"m must be >= 1, got {m}")
    return HeatKernelFunction(kernel=k, t=math.pow(m, -1.0 / k.alpha))


def psi_limit_study(
    v: CandidateV,
    sol: FieldSolution,
    m_list: Sequence[int],
    pairs: Sequence[tuple[float, float]] | None = None,
) -> list[tuple[int, float, float, float]]:
    """
    Pairing-level path-independence checks with φ = ψ^m for growing m.

    Rows (m, ψ^m(0)/c_θ, median gap, max gap). The scaling column is reported next to the
    gaps; no limit is asserted.
    """
    rows = []
    for m in m_list:
        psi = psi_m(sol.theta_kernel, m)
        report = verify_field_path_independence(v, psi, sol, pairs)
        scale = psi.at_zero() / sol.c_theta
        rows.append((m, scale, report.median_gap(), float(np.max(report.pathwise_gap))))
        logger.info(f"psi_limit m={m}: psi(0)/c={scale:.4g} median gap={report.median_gap():.3e}")
    return rows
