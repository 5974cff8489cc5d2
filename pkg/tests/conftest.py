import warnings

import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("ci", max_examples=60, deadline=None)
settings.load_profile("ci")

warnings.filterwarnings("ignore", message=".*TBB.*")


@pytest.fixture(autouse=True)
def _seed_numpy():
    np.random.seed(0)
