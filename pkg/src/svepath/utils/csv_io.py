from __future__ import annotations

"""CSV readers and writers for result tables.

All tables use a one-line header, ``,`` separators, LF line endings, and 17 significant
digits, so every double survives a write/read cycle exactly.
"""

import csv
import logging
from collections.abc import Iterable, Sequence
from pathlib import Path

import numpy as np
from numpy.typing import ArrayLike

from svepath.exceptions import ParameterError
from svepath.types.core import FloatArray

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.17g"


def format_float(value: float) -> str:
    """Locale-independent 17-significant-digit rendering."""
    return FLOAT_FORMAT % value


def write_table(path: str | Path, header: Sequence[str], columns: Sequence[ArrayLike]) -> Path:
    """
    Write numeric columns under ``header``.

    Args:
        path: Output file
        header: Column names
        columns: One array per column, all the same length

    Returns:
        The written path
    """
    if len(header) != len(columns):
        raise ParameterError(f"{len(header)} header names for {len(columns)} columns")
    data = np.column_stack([np.asarray(c, dtype=np.float64).ravel() for c in columns])
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    np.savetxt(
        path,
        data,
        fmt=FLOAT_FORMAT,
        delimiter=",",
        newline="\n",
        header=",".join(header),
        comments="",
    )
    logger.debug(f"Wrote {data.shape[0]} rows to {path}")
    return path


def read_table(path: str | Path) -> tuple[list[str], FloatArray]:
    """Read a numeric table written by :func:`write_table`."""
    path = Path(path)
    with open(path, encoding="utf-8") as f:
        header = f.readline().strip().split(",")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2, dtype=np.float64)
    return header, data


def write_records(
    path: str | Path, header: Sequence[str], rows: Iterable[Sequence[str | float]]
) -> Path:
    """Write mixed text/numeric rows (floats rendered at 17 significant digits)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow(
                [cell if isinstance(cell, str) else format_float(float(cell)) for cell in row]
            )
    return path


def read_records(path: str | Path) -> tuple[list[str], list[list[str]]]:
    """Read rows written by :func:`write_records` as strings."""
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.reader(f)
        header = next(reader)
        return header, [row for row in reader]
