import numpy as np
import pytest

from funbayes import FunctionalDataset, Grid


@pytest.fixture
def unit_grid():
    return Grid.regular(0.0, 1.0, 51)


@pytest.fixture
def fine_grid():
    return Grid.regular(0.0, 1.0, 201)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def make_dataset(grid, curves, labels, priors=None):
    return FunctionalDataset.from_arrays(grid, curves, labels, priors)


@pytest.fixture
def two_group_dataset(unit_grid, rng):
    """40 noisy curves: group 1 shifted upward relative to group 0."""
    t = unit_grid.points
    n = 40
    labels = np.repeat([0, 1], n // 2)
    curves = np.empty((n, t.size))
    for i, lab in enumerate(labels):
        amp = rng.standard_normal(3)
        curves[i] = (
            lab * 1.5 * t
            + amp[0] * np.sqrt(2) * np.sin(2 * np.pi * t)
            + 0.5 * amp[1] * np.sqrt(2) * np.cos(2 * np.pi * t)
            + 0.25 * amp[2]
            + 0.2 * rng.standard_normal(t.size)
        )
    return make_dataset(unit_grid, curves, labels)
