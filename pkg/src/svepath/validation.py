"""Sampled invariant checks for coefficients and candidate fields.

Global Hölder or growth bounds cannot be verified mechanically; these checks draw random
probes and fail on the first violation found. Probe counts and ranges are arguments so
the same checks run quickly in tests and more thoroughly in ``selftest``.
"""

from __future__ import annotations

from typing import TYPE_CHECKING

import numpy as np

from svepath.coefficients import CoefficientPair, HolderCoefficient

if TYPE_CHECKING:
    from svepath.path_independence import CandidateV

HOLDER_SLACK = 1e-9


class ValidationError(ValueError):
    """Raised when a sampled invariant fails."""

    pass


def _probes(
    n_probes: int, radius: float, horizon: float, seed: int
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    rng = np.random.default_rng(seed)
    t = rng.uniform(0.0, horizon, n_probes)
    x1 = rng.uniform(-radius, radius, n_probes)
    x2 = rng.uniform(-radius, radius, n_probes)
    return t, x1, x2


def check_holder(
    f: HolderCoefficient,
    n_probes: int = 1000,
    radius: float = 20.0,
    horizon: float = 1.0,
    seed: int = 0,
) -> None:
    """|f(t, x₁) - f(t, x₂)| ≤ L(1 + 1e-9)|x₁ - x₂|^γ on random probes.

    Raises:
        ValidationError: On the first violating probe
    """
    t, x1, x2 = _probes(n_probes, radius, horizon, seed)
    # Include close pairs, where Hölder (γ < 1) violations show first.
    x2[: n_probes // 2] = x1[: n_probes // 2] + np.geomspace(1e-8, 1.0, n_probes // 2)
    for ti, a, b in zip(t, x1, x2, strict=True):
        lhs = abs(float(f(ti, a)) - float(f(ti, b)))
        rhs = f.lipschitz * (1.0 + HOLDER_SLACK) * abs(a - b) ** f.gamma
        if lhs > rhs + 1e-15:
            raise ValidationError(
                f"{f.name} violates its Hölder bound at t={ti}, x1={a}, x2={b}: "
                f"{lhs} > {rhs} (gamma={f.gamma}, L={f.lipschitz})"
            )


def check_growth(
    f: HolderCoefficient,
    n_probes: int = 1000,
    radius: float = 20.0,
    horizon: float = 1.0,
    seed: int = 1,
) -> None:
    """|f(t, x)| ≤ L(1 + |x|) on random probes."""
    t, x, _ = _probes(n_probes, radius, horizon, seed)
    for ti, xi in zip(t, x, strict=True):
        value = abs(float(f(ti, xi)))
        if value > f.lipschitz * (1.0 + abs(xi)) * (1.0 + HOLDER_SLACK) + 1e-15:
            raise ValidationError(
                f"{f.name} violates its growth bound at t={ti}, x={xi}: |f|={value}"
            )


def check_decreasing(
    f: HolderCoefficient,
    n_probes: int = 1000,
    radius: float = 20.0,
    horizon: float = 1.0,
    seed: int = 2,
) -> None:
    """f(t, ·) nonincreasing on sorted random samples (only when the flag is declared)."""
    if not f.decreasing_in_x:
        return
    rng = np.random.default_rng(seed)
    xs = np.sort(rng.uniform(-radius, radius, n_probes))
    for ti in rng.uniform(0.0, horizon, 8):
        values = np.asarray(f(ti, xs))
        jumps = np.diff(values)
        if np.any(jumps > 1e-12):
            k = int(np.argmax(jumps))
            raise ValidationError(
                f"{f.name} is declared decreasing but increases between "
                f"x={xs[k]} and x={xs[k + 1]} at t={ti}"
            )


def validate_coefficient(f: HolderCoefficient, n_probes: int = 1000, radius: float = 20.0) -> None:
    """Run the Hölder, growth and monotonicity checks."""
    check_holder(f, n_probes, radius)
    check_growth(f, n_probes, radius)
    check_decreasing(f, n_probes, radius)


def validate_pair(pair: CoefficientPair, n_probes: int = 1000, radius: float = 20.0) -> None:
    """Check both coefficients of a pair against their declared metadata."""
    validate_coefficient(pair.b, n_probes, radius)
    validate_coefficient(pair.sigma, n_probes, radius)


def check_candidate_derivatives(
    v: CandidateV,
    n_probes: int = 64,
    h: float = 1e-3,
    rel_tol: float = 1e-4,
    seed: int = 3,
) -> None:
    """
    Central differences of v agree with its analytic derivatives at order h².

    Each derivative is compared at step h and h/2; the error must be below ``rel_tol``
    (relative to 1 + |derivative|) at step h.

    Raises:
        ValidationError: If a derivative disagrees, or a bounded v exceeds its bound
    """
    rng = np.random.default_rng(seed)
    t = rng.uniform(0.1, 1.0, n_probes)
    z = rng.uniform(-3.0, 3.0, n_probes)
    checks = {
        "dt_v": (v.dt_v(t, z), (v.v(t + h, z) - v.v(t - h, z)) / (2 * h)),
        "dz_v": (v.dz_v(t, z), (v.v(t, z + h) - v.v(t, z - h)) / (2 * h)),
        "dzz_v": (
            v.dzz_v(t, z),
            (v.v(t, z + h) - 2.0 * v.v(t, z) + v.v(t, z - h)) / (h * h),
        ),
    }
    for name, (exact, approx) in checks.items():
        err = np.abs(np.asarray(exact) - np.asarray(approx)) / (1.0 + np.abs(exact))
        if float(err.max()) > rel_tol:
            raise ValidationError(
                f"candidate '{v.name}': {name} disagrees with central differences "
                f"(max relative error {float(err.max()):.3e})"
            )
    if v.bound is not None:
        for name, values in (
            ("v", v.v(t, z)),
            ("dt_v", v.dt_v(t, z)),
            ("dz_v", v.dz_v(t, z)),
            ("dzz_v", v.dzz_v(t, z)),
        ):
            if float(np.max(np.abs(values))) > v.bound:
                raise ValidationError(f"candidate '{v.name}': |{name}| exceeds bound {v.bound}")
