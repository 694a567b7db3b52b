from __future__ import annotations

"""Experiment configuration: the ExperimentConfig record and ``key = value`` files."""

import logging
import math
from collections.abc import Mapping
from pathlib import Path
from typing import Any

from pydantic import Field, ValidationError, field_validator

from svepath.exceptions import ParameterError
from svepath.kernels import SingularKernel, parse_kernel_spec
from svepath.types.base import SvepathModel
from svepath.types.core import TimeGrid

logger = logging.getLogger(__name__)

RUN_CONFIG_NAME = "run.conf"


class ExperimentConfig(SvepathModel):
    """Everything an experiment needs; file keys and CLI flags use these field names."""

    kernel: str = "powerlaw:alpha=0.25"
    fixture: str = "lipschitz"
    T: float = Field(default=1.0, gt=0)
    n: int = Field(default=512, ge=1)
    paths: int = Field(default=1024, ge=1)
    p: float | None = Field(default=None, gt=0)
    seed: int = Field(default=0, ge=0)
    out: Path = Path("out")
    x0: float = 1.0
    workers: int = Field(default=1, ge=1)
    strict_window: bool = True
    m_list: list[int] = Field(default_factory=lambda: [4, 16, 64])
    levels: list[int] = Field(default_factory=lambda: [256, 512, 1024])
    lags: list[float] | None = None
    z_probes: int = Field(default=41, ge=2)
    candidate: str = "damped_sine"
    bump_scale: float = Field(default=2.0, gt=0)
    field_points: int = Field(default=201, ge=2)

    @field_validator("kernel")
    @classmethod
    def _kernel_parses(cls, v: str) -> str:
        try:
            parse_kernel_spec(v)
        except ParameterError as e:
            raise ValueError(e.message) from None
        return v

    @field_validator("m_list", "levels", "lags", mode="before")
    @classmethod
    def _split_list(cls, v: Any) -> Any:
        if isinstance(v, str):
            return [item.strip() for item in v.split(",") if item.strip()]
        return v

    @property
    def kernel_model(self) -> SingularKernel:
        return parse_kernel_spec(self.kernel)

    @property
    def alpha(self) -> float:
        return self.kernel_model.singularity_exponent

    @property
    def grid(self) -> TimeGrid:
        return TimeGrid(horizon=self.T, n=self.n)

    @property
    def moment_order(self) -> float:
        """``p`` if set, else ⌈2/(1-2α)⌉ + 1."""
        if self.p is not None:
            return self.p
        return float(math.ceil(2.0 / (1.0 - 2.0 * self.alpha)) + 1)


def parse_config_text(text: str, source: str = "<config>") -> dict[str, str]:
    """
    Parse ``key = value`` lines; ``#`` starts a comment, blank lines are ignored.

    Raises:
        ParameterError: On malformed lines or unknown keys
    """
    values: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep or not key:
            raise ParameterError(f"{source}:{lineno}: expected 'key = value', got {raw!r}")
        if key not in ExperimentConfig.model_fields:
            raise ParameterError(
                f"{source}:{lineno}: unknown key '{key}'",
                suggestion=f"Known keys: {', '.join(sorted(ExperimentConfig.model_fields))}",
            )
        values[key] = value.strip()
    return values


def load_config(path: str | Path) -> dict[str, str]:
    """Read a ``key = value`` configuration file."""
    path = Path(path)
    if not path.exists():
        raise ParameterError(f"config file {path} does not exist")
    return parse_config_text(path.read_text(encoding="utf-8"), source=str(path))


def merge_config(
    file_values: Mapping[str, Any] | None = None, overrides: Mapping[str, Any] | None = None
) -> ExperimentConfig:
    """File values first, then every override that is not None.

    Raises:
        ParameterError: If the merged values do not validate
    """
    merged: dict[str, Any] = dict(file_values or {})
    merged.update({k: v for k, v in (overrides or {}).items() if v is not None})
    try:
        return ExperimentConfig(**merged)
    except ValidationError as e:
        first = e.errors()[0]
        where = ".".join(str(part) for part in first["loc"])
        raise ParameterError(f"invalid configuration value for '{where}': {first['msg']}") from e


def _render(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (list, tuple)):
        return ",".join(_render(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_key_values(path: str | Path, values: Mapping[str, Any]) -> Path:
    """Write ``key = value`` lines with an atomic write."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)

    # Write to temporary file first
    temp_file = path.with_suffix(path.suffix + ".tmp")
    with open(temp_file, "w", encoding="utf-8", newline="\n") as f:
        for key, value in values.items():
            if value is not None:
                f.write(f"{key} = {_render(value)}\n")

    # Atomic rename
    temp_file.replace(path)
    return path


def save_config(config: ExperimentConfig, directory: str | Path | None = None) -> Path:
    """Record the effective configuration as ``run.conf`` in ``directory`` (default: out)."""
    target = Path(directory) if directory is not None else config.out
    path = write_key_values(target / RUN_CONFIG_NAME, config.model_dump())
    logger.info(f"Wrote effective configuration to {path}")
    return path


def write_sidecar(path: str | Path, metadata: Mapping[str, Any]) -> Path:
    """Metadata file next to a CSV output, in the same ``key = value`` format."""
    return write_key_values(path, metadata)


def read_key_values(path: str | Path) -> dict[str, str]:
    """Read any ``key = value`` file without checking keys (sidecars)."""
    values: dict[str, str] = {}
    for raw in Path(path).read_text(encoding="utf-8").splitlines():
        line = raw.split("#", 1)[0].strip()
        if line:
            key, _, value = line.partition("=")
            values[key.strip()] = value.strip()
    return values
