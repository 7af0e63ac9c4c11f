import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from core_model import RngStream  # noqa: E402


@pytest.fixture
def rng():
    return RngStream(20240601)


@pytest.fixture
def make_rng():
    def factory(seed, stream=0):
        return RngStream(seed, stream)
    return factory
