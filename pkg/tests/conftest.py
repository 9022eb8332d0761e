import numpy as np
import pytest

from sinodiff import ProjectionGeometry, Projector


@pytest.fixture(scope="session")
def geo64():
    """Default full-scale geometry used throughout the suite."""
    return ProjectionGeometry(n_angles=90, n_bins=95, image_size=64)


@pytest.fixture(scope="session")
def proj64(geo64):
    return Projector(geo64)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
