"""Shared fixtures: kernel tables, constants, and Monte Carlo runs.

The default-resolution tables and the L=64 oracle runs are session-scoped
because several test modules (and most acceptance criteria) share them.
"""

import numpy as np
import pytest

from homogenize import (
    build_kernel_table,
    dimension_constants,
    estimate_sigma_e,
    two_component,
)
from homogenize.kernel import DEFAULTS


@pytest.fixture(scope="session")
def table2_small():
    """Cheap 2D table for unit tests that only need rough values."""
    return build_kernel_table(2, 128, 10)


@pytest.fixture(scope="session")
def table2():
    return build_kernel_table(2, *DEFAULTS[2])


@pytest.fixture(scope="session")
def table3():
    return build_kernel_table(3, *DEFAULTS[3])


@pytest.fixture(scope="session")
def table4():
    return build_kernel_table(4, *DEFAULTS[4])


@pytest.fixture(scope="session")
def table5():
    return build_kernel_table(5, *DEFAULTS[5])


@pytest.fixture(scope="session")
def const2(table2):
    return dimension_constants(table=table2)[0]


@pytest.fixture(scope="session")
def const3(table3):
    return dimension_constants(table=table3)[0]


@pytest.fixture(scope="session")
def const4(table4):
    return dimension_constants(table=table4)[0]


@pytest.fixture(scope="session")
def const5(table5):
    return dimension_constants(table=table5)[0]


@pytest.fixture(scope="session")
def kd_dist():
    return two_component(0.6, 1.4)


@pytest.fixture(scope="session")
def mc_kd(kd_dist):
    """Criterion-6 run: d=2, L=64, 200 samples on the 0.6/1.4 law."""
    return estimate_sigma_e(2, 64, kd_dist, samples=200, seed=7)


@pytest.fixture(scope="session")
def mc_selfdual():
    return estimate_sigma_e(2, 64, two_component(2.0, 0.5), samples=200, seed=8)


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)
