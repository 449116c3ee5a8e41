import numpy as np
import pytest

from qrm import RationalMap2


def random_map(rng):
    """A map with complex Gaussian coefficients, redrawn until comfortably nondegenerate."""
    while True:
        cs = rng.normal(size=6) + 1j * rng.normal(size=6)
        g = RationalMap2(cs)
        if abs(g.resultant()) > 1e-3:
            return g


def random_maps(count, seed):
    rng = np.random.default_rng(seed)
    return [random_map(rng) for _ in range(count)]


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
