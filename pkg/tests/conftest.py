"""Shared fixtures"""

import numpy as np
import pytest

from src.models import MixingParams
from src.separation.mixing import jacobian


@pytest.fixture
def w_star() -> MixingParams:
    """Mixture with a positive Jacobian on [-0.5, 0.5]^2"""
    return MixingParams(-0.2, 0.2, -0.8, 0.8)


@pytest.fixture
def identity() -> MixingParams:
    return MixingParams(0.0, 0.0, 0.0, 0.0)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(12345))


def random_admissible(rng: np.random.Generator, count: int, min_abs_j: float = 0.1):
    """(w, s) pairs with w in [-0.5, 0.5]^4, s in [-0.5, 0.5]^2 and |J| >= min_abs_j"""
    pairs = []
    while len(pairs) < count:
        w = MixingParams.from_array(rng.uniform(-0.5, 0.5, size=4))
        s = rng.uniform(-0.5, 0.5, size=2)
        if abs(float(jacobian(w, s))) >= min_abs_j:
            pairs.append((w, s))
    return pairs
