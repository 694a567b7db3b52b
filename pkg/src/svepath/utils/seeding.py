from __future__ import annotations

"""Deterministic per-path random substreams."""

import numpy as np

from svepath.exceptions import ParameterError

# Paths are simulated in fixed blocks of consecutive indices so that results never
# depend on how blocks are distributed over workers.
PATH_CHUNK = 256


def sub_seed(seed: int, path: int) -> np.random.SeedSequence:
    """
    Seed sequence of path ``path`` under the root ``seed``.

    Mixing is numpy's SeedSequence hash of (seed, spawn_key=(path,)), so path k is the
    same stream whether it is drawn alone, in a block, or by another worker.
    """
    if seed < 0 or path < 0:
        raise ParameterError(f"seed and path index must be non-negative (seed={seed}, path={path})")
    return np.random.SeedSequence(seed, spawn_key=(path,))


def path_generator(seed: int, path: int) -> np.random.Generator:
    """Generator for path ``path``."""
    return np.random.Generator(np.random.PCG64(sub_seed(seed, path)))


def path_chunks(n_paths: int, chunk: int = PATH_CHUNK) -> list[range]:
    """Consecutive index blocks covering ``range(n_paths)``."""
    if n_paths < 1:
        raise ParameterError(f"n_paths must be >= 1, got {n_paths}")
    return [range(start, min(start + chunk, n_paths)) for start in range(0, n_paths, chunk)]
