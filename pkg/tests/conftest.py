import numpy as np
import pytest
from hypothesis import strategies as st

from quditxor.core import random_density_matrix, random_pure_state

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in ACCEPTANCE_LINES:
        terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)


seeds = st.integers(min_value=0, max_value=2**32 - 1)
small_dims = st.integers(min_value=2, max_value=6)


def pure(dims, seed):
    return random_pure_state(dims, np.random.default_rng(seed))


def mixed(dims, seed, rank=None):
    return random_density_matrix(dims, np.random.default_rng(seed), rank)
