from __future__ import annotations

"""Utility functions."""

from svepath.utils.csv_io import (
    format_float,
    read_records,
    read_table,
    write_records,
    write_table,
)
from svepath.utils.seeding import PATH_CHUNK, path_chunks, path_generator, sub_seed

__all__ = [
    "PATH_CHUNK",
    "format_float",
    "path_chunks",
    "path_generator",
    "read_records",
    "read_table",
    "sub_seed",
    "write_records",
    "write_table",
]
