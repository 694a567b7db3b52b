"""Test helpers for svepath.

Provides small preconfigured experiments, drivers and test functions used by the test suite,
``svepath selftest`` and interactive sessions.

Example:
    from svepath.testing import SMALL_CONFIG, make_driver
    from svepath.experiments import simulate_single

    path = simulate_single(SMALL_CONFIG)
"""

from __future__ import annotations

from svepath.testing.test_helpers import (
    GAUSSIAN_CONFIG,
    SMALL_CONFIG,
    SMALL_FBM_CONFIG,
    TEST_ALPHA,
    TEST_SEED,
    small_config,
    make_bump,
    make_driver,
    make_ensemble,
    make_grid,
    make_kernel,
    make_quadratic_bump,
)

__all__ = [
    "GAUSSIAN_CONFIG",
    "SMALL_CONFIG",
    "SMALL_FBM_CONFIG",
    "TEST_ALPHA",
    "TEST_SEED",
    "small_config",
    "make_bump",
    "make_driver",
    "make_ensemble",
    "make_grid",
    "make_kernel",
    "make_quadratic_bump",
]
