from __future__ import annotations

"""Singular Volterra kernels and the kernel-spec parser."""

from pydantic import ValidationError

from svepath.exceptions import ParameterError
from svepath.kernels.base import SingularKernel
from svepath.kernels.fbm_exact import FbmExactKernel
from svepath.kernels.power_law import FbmSimpleKernel, PowerLawKernel, power_law_weights
from svepath.types.core import KernelVariant

_PARAM_ALIASES = {
    "α": "alpha",
    "a": "alpha",
    "alpha": "alpha",
    "scale": "scale",
    "h": "H",
    "c": "C",
}

_PARAMS_BY_VARIANT: dict[KernelVariant, tuple[type[SingularKernel], dict[str, str]]] = {
    KernelVariant.POWER_LAW: (PowerLawKernel, {"alpha": "alpha", "scale": "scale", "C": "scale"}),
    KernelVariant.FBM_SIMPLE: (FbmSimpleKernel, {"H": "H", "C": "C"}),
    KernelVariant.FBM_EXACT: (FbmExactKernel, {"H": "H"}),
}


def parse_kernel_spec(spec: str) -> SingularKernel:
    """
    Build a kernel from ``variant:key=value,...``.

    Examples: ``powerlaw:α=0.25``, ``powerlaw:alpha=0.1,scale=2``,
    ``fbm-simple:H=0.25,C=1``, ``fbm-exact:H=0.25``.

    Raises:
        ParameterError: On an unknown variant or key, or invalid parameter values
    """
    name, _, rest = spec.strip().partition(":")
    try:
        variant = KernelVariant(name.strip().lower())
    except ValueError:
        known = ", ".join(v.value for v in KernelVariant)
        raise ParameterError(
            f"unknown kernel variant '{name}'", suggestion=f"Use one of: {known}"
        ) from None
    model, accepted = _PARAMS_BY_VARIANT[variant]
    params: dict[str, float] = {}
    for item in filter(None, (part.strip() for part in rest.split(","))):
        key, sep, raw = item.partition("=")
        if not sep:
            raise ParameterError(f"kernel parameter '{item}' is not of the form key=value")
        canonical = _PARAM_ALIASES.get(key.strip().lower(), key.strip())
        if canonical not in accepted:
            raise ParameterError(
                f"kernel '{variant.value}' has no parameter '{key.strip()}'",
                suggestion=f"Accepted: {', '.join(sorted(accepted))}",
            )
        try:
            params[accepted[canonical]] = float(raw)
        except ValueError:
            raise ParameterError(
                f"kernel parameter {key.strip()}={raw!r} is not a number"
            ) from None
    try:
        return model(**params)
    except ValidationError as e:
        raise ParameterError(f"invalid kernel spec '{spec}': {e.errors()[0]['msg']}") from e


__all__ = [
    "FbmExactKernel",
    "FbmSimpleKernel",
    "PowerLawKernel",
    "SingularKernel",
    "parse_kernel_spec",
    "power_law_weights",
]
