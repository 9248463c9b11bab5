import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from ipbc import generate_blobs


@pytest.fixture
def tight_blobs():
    """Three well-separated blobs; the easy end-to-end fixture."""
    return generate_blobs(30, 5, 3, 12.0, 0.4, seed=7)


@pytest.fixture
def overlap_blobs():
    """The entangled-pair benchmark instance used across the suite."""
    return generate_blobs(100, 10, 4, 14.0, 2.0, overlap_pair=(1, 2), seed=0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
