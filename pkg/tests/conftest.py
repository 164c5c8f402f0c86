"""Shared fixtures for the privsig test suite."""

import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..', 'src'))

from privsig.models.game import GameSpec, JointGaussian  # noqa: E402
from privsig.services.solver_manager import SolverManager  # noqa: E402


def _random_source(rng: np.random.Generator, n_x: int, n_y: int) -> JointGaussian:
    n = n_x + n_y
    a = rng.standard_normal((n, n)) / np.sqrt(n)
    return JointGaussian(n_x=n_x, n_y=n_y, sigma=a @ a.T + 0.5 * np.eye(n))


@pytest.fixture
def random_source():
    """Factory for seeded random sources with a well-conditioned covariance."""
    def make(seed: int, n_x: int = 2, n_y: int = 2) -> JointGaussian:
        return _random_source(np.random.default_rng(seed), n_x, n_y)
    return make


@pytest.fixture
def random_specs():
    """100 seeded noiseless games with n_x, n_y in 1..4 and delta in [0.1, 10]."""
    rng = np.random.default_rng(2024)
    specs = []
    for _ in range(100):
        n_x, n_y = (int(v) for v in rng.integers(1, 5, size=2))
        delta = float(10.0 ** rng.uniform(-1, 1))
        specs.append(GameSpec(source=_random_source(rng, n_x, n_y), delta=delta))
    return specs


@pytest.fixture
def unit_source():
    """Scalar source with unit variances and rho = 0.75."""
    return JointGaussian.scalar(1.0, 1.0, 0.75)


@pytest.fixture
def manager():
    """Initialized solver manager."""
    return SolverManager().initialize()
