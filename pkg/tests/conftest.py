import logging

import numpy as np
import pytest

from batchscope.models.domain import Batch, Bounds, EvaluatedSet


@pytest.fixture(autouse=True)
def _quiet_logging(caplog):
    caplog.set_level(logging.WARNING)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def unit_square():
    return Bounds.uniform(0.0, 1.0, 2)


@pytest.fixture
def step_data(rng, unit_square):
    """200 uniform points in [0,1]^2 with y = 1{x1 > 0.5}."""
    points = rng.uniform(0.0, 1.0, size=(200, 2))
    return EvaluatedSet(points=points, values=(points[:, 0] > 0.5).astype(float), bounds=unit_square)


@pytest.fixture
def linear_data(rng):
    """60 uniform points in [0,1]^3 with y = 3*x1 + x2 (x3 irrelevant)."""
    points = rng.uniform(0.0, 1.0, size=(60, 3))
    return EvaluatedSet(points=points, values=3.0 * points[:, 0] + points[:, 1], bounds=Bounds.uniform(0.0, 1.0, 3))


@pytest.fixture
def small_batch():
    return Batch(points=[[0.1, 0.2], [0.8, 0.3], [0.4, 0.9]])
