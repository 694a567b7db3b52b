from __future__ import annotations

"""Exception hierarchy for svepath."""

from typing import Any


class SvepathError(Exception):
    """Base exception for all svepath errors."""

    def __init__(self, message: str, suggestion: str | None = None):
        """Initialize exception with an optional remedy."""
        self.message = message
        self.suggestion = suggestion

        full_message = message
        if suggestion:
            full_message = f"{full_message}\n  hint: {suggestion}"

        super().__init__(full_message)


class ParameterError(SvepathError, ValueError):
    """Invalid input parameters."""


class DomainError(ParameterError):
    """Evaluation requested outside a function's domain."""


class MomentWindowError(ParameterError):
    """Moment order outside the integrability window p > 2/(1-2α)."""

    def __init__(self, p: float, alpha: float):
        """Initialize with the offending order and the kernel exponent."""
        self.p = p
        self.alpha = alpha
        window = 2.0 / (1.0 - 2.0 * alpha)
        message = f"moment order p={p} is outside the window p > 2/(1-2α) = {window:.6g}"
        suggestion = (
            f"Use p > {window:.6g} for α={alpha}, or pass strict_window=False "
            "to estimate outside the window."
        )
        super().__init__(message, suggestion)


class UnknownFixtureError(ParameterError):
    """Requested coefficient fixture does not exist."""

    def __init__(self, name: str, available: list[str]):
        """Initialize with the requested and available fixture names."""
        self.name = name
        self.available = available
        suggestion = f"Available fixtures: {', '.join(sorted(available))}"
        super().__init__(f"Unknown coefficient fixture '{name}'", suggestion)


class NumericalError(SvepathError, ArithmeticError):
    """Numerical procedure failed; diagnostics describe where."""

    def __init__(
        self,
        message: str,
        diagnostics: dict[str, Any] | None = None,
        suggestion: str | None = None,
    ):
        """Initialize with diagnostics."""
        self.diagnostics = diagnostics or {}
        if self.diagnostics:
            details = ", ".join(f"{k}={v}" for k, v in self.diagnostics.items())
            message = f"{message} ({details})"
        super().__init__(message, suggestion)


class BlowUpError(NumericalError):
    """Solver produced a non-finite or exploding value."""

    def __init__(self, step: int, value: float, threshold: float):
        """Initialize with the step that exploded."""
        self.step = step
        self.value = value
        super().__init__(
            f"solution blew up at step {step}",
            diagnostics={"value": value, "threshold": threshold},
            suggestion="Check the coefficient constants, or refine the time grid.",
        )


class ConvergenceError(NumericalError):
    """Iterative procedure did not converge."""

    def __init__(
        self,
        message: str,
        gaps: list[float] | None = None,
        diagnostics: dict[str, Any] | None = None,
    ):
        """Initialize with the gap sequence observed so far."""
        self.gaps = list(gaps or [])
        diag = dict(diagnostics or {})
        if self.gaps:
            diag.setdefault("last_gap", self.gaps[-1])
            diag.setdefault("iterations", len(self.gaps))
        super().__init__(message, diag)


class TruncationError(NumericalError):
    """Quadrature tail mass exceeded tolerance."""

    def __init__(self, tail: float, tol: float):
        """Initialize with the estimated tail contribution."""
        self.tail = tail
        super().__init__(
            "spatial grid truncates the kernel mass",
            diagnostics={"tail_estimate": tail, "tol": tol},
            suggestion="Widen the SpatialGrid span (SpatialGrid.for_kernel) or lower the horizon.",
        )
