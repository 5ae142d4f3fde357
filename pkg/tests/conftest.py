import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from hypothesis import settings

settings.register_profile("package", max_examples=50, deadline=None)
settings.load_profile("package")


@pytest.fixture
def rng():
    return np.random.Generator(np.random.Philox(20240814))
