"""
Configuration for pytest: project root on the path and shared fixtures.
"""

import sys
from pathlib import Path

import numpy as np
import pytest

# Add project root to path
sys.path.insert(0, str(Path(__file__).parent.parent))

from src.linalg.backend import ExactBackend, NumericBackend  # noqa: E402


@pytest.fixture
def exact():
    return ExactBackend()


@pytest.fixture
def numeric():
    return NumericBackend()


@pytest.fixture(params=["exact", "numeric"])
def backend(request):
    """Both scalar fields."""
    return ExactBackend() if request.param == "exact" else NumericBackend()


@pytest.fixture
def rng():
    return np.random.default_rng(0)


def unit_matrix(backend, n, i, j):
    """1-based matrix unit E_ij."""
    return backend.matrix_unit(n, i - 1, j - 1)


def vec(backend, *values):
    return backend.asarray(list(values))
