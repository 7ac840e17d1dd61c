"""Shared fixtures: repo root on sys.path, small grids, seeded generators"""

import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from models import TorusGrid  # noqa: E402


@pytest.fixture
def grid_1d():
    return TorusGrid(1, 64)


@pytest.fixture
def grid_2d():
    return TorusGrid(2, 16)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
