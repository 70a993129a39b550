import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", max_examples=25, deadline=None)
settings.load_profile("default")


def theta_1d(tau: complex, z: complex, eps: float = 0.0, delta: float = 0.0, N: int = 30) -> complex:
    """Independent genus-1 oracle: direct sum over |n| <= N."""
    n = np.arange(-N, N + 1) + eps
    return complex(np.sum(np.exp(1j * np.pi * n * n * tau + 2j * np.pi * n * (z + delta))))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
