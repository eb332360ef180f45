import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def rand_nchw(rng, n, c, h, w, lo=-1.0, hi=1.0):
    return (rng.random((n, c, h, w)) * (hi - lo) + lo).astype(np.float32)
