import numpy as np
import pytest

from twist_orbits.framework import (
    SamplingGrid,
    TwistMap,
    catalog_genfun,
    certify_convexity,
    free_model,
    integrable_genfun,
    pendulum_model
)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def small_grid():
    return SamplingGrid(per_axis=8, delta_per_axis=3, random=500, seed=0)


@pytest.fixture
def integrable():
    return integrable_genfun(1.0)


@pytest.fixture
def standard():
    return catalog_genfun('standard', {'s': 0.8})


@pytest.fixture
def froeschle():
    return catalog_genfun('froeschle', {'K1': 0.1, 'K2': 0.1, 'lam': 0.05})


@pytest.fixture
def standard_map(standard, small_grid):
    return TwistMap(S=standard, tc=certify_convexity(standard, small_grid))


@pytest.fixture
def froeschle_map(froeschle, small_grid):
    return TwistMap(S=froeschle, tc=certify_convexity(froeschle, small_grid))


@pytest.fixture
def pendulum():
    return pendulum_model(1.0)


@pytest.fixture
def free():
    return free_model(1)
