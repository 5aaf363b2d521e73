import numpy as np
import pytest

from malfilter import network_system


@pytest.fixture(scope="session")
def sys9():
    """The standard 9-node plant at a 100:1 cost ratio."""
    return network_system()


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(12345)
