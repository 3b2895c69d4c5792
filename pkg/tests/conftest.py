import time

import numpy as np
import pytest

SESSION_START = time.monotonic()


def pytest_collection_modifyitems(config, items):
    """Run the acceptance criteria last so the runtime criterion sees the whole suite."""
    items.sort(key=lambda item: item.nodeid.startswith("tests/test_acceptance.py"))


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def random_hermitian(rng, n, scale=1.0):
    g = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return scale * (g + g.conj().T) / 2
