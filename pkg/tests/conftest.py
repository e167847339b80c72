"""Shared fixtures: tiny datasets and distributions reused across test modules."""

import numpy as np
import pytest

from labelvar.data import Dataset, sample_boundary_2d, sample_lowvar_highvar, SyntheticConfig
from labelvar.losses import FiniteDistribution


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def boundary_ds():
    return sample_boundary_2d(200, seed=7)


@pytest.fixture
def lowvar_ds():
    return sample_lowvar_highvar(SyntheticConfig(d=6, n=400, gamma=0.1, seed=3))


@pytest.fixture
def two_point_dist():
    """Symmetric binary distribution on x = +-1 with equal mass."""
    return FiniteDistribution(
        points=np.array([[1.0], [-1.0]]),
        labels=np.array([1, -1]),
        probs=np.array([0.5, 0.5]),
        k=2,
    )


@pytest.fixture
def separable_ds():
    rng = np.random.default_rng(42)
    y = rng.integers(0, 2, size=40) * 2 - 1
    x = rng.normal(size=(40, 3))
    x[:, 0] = np.abs(x[:, 0]) + 1.0
    x[:, 0] *= y
    return Dataset(features=x, labels=y, k=2)
