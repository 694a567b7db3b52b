from __future__ import annotations

"""Base models for svepath records."""

from typing import Any

from pydantic import BaseModel, ConfigDict


class SvepathModel(BaseModel):
    """Immutable record model.

    Records are shared freely across worker threads, so every model is frozen.
    Optional fields that are unset are omitted from dumps.
    """

    model_config = ConfigDict(frozen=True)

    def model_dump(self, **kwargs: Any) -> dict[str, Any]:
        if "exclude_none" not in kwargs:
            kwargs["exclude_none"] = True
        return super().model_dump(**kwargs)

    def model_dump_json(self, **kwargs: Any) -> str:
        if "exclude_none" not in kwargs:
            kwargs["exclude_none"] = True
        return super().model_dump_json(**kwargs)


class ArrayModel(SvepathModel):
    """Frozen record that may hold numpy arrays and callables."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)
