from __future__ import annotations

import numpy as np
import pytest

from halfwave.model import BumpProfile, make_initial_data
from halfwave.spectral_grid import GridSpec


def philox(seed: int = 0) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(seed))


@pytest.fixture
def rng():
    return philox(1234)


@pytest.fixture(scope="session")
def bump_1d():
    grid = GridSpec(1, 256)
    return make_initial_data(BumpProfile(epsilon=0.1), None, grid)


@pytest.fixture(scope="session")
def bump_1d_128():
    grid = GridSpec(1, 128)
    return make_initial_data(BumpProfile(epsilon=0.1), None, grid)


@pytest.fixture(scope="session")
def bump_2d():
    grid = GridSpec(2, 32)
    return make_initial_data(BumpProfile(epsilon=0.1), None, grid)
