import sys
from pathlib import Path

import numpy as np
import pytest

# Add the package source to path
sys.path.insert(0, str(Path(__file__).parent.parent / "packages" / "mp-viz" / "src"))


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: end-to-end acceptance runs (deselect with -m 'not slow')")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def small_candidates():
    from mp_viz.dataset import CandidateSet

    objectives = np.array(
        [
            [1.0, 5.0, 0.2],
            [2.0, 4.0, 0.4],
            [3.0, 3.5, 0.1],
            [4.0, 1.0, 0.9],
            [5.0, 2.0, 0.3],
            [6.0, 0.5, 0.6],
        ]
    )
    return CandidateSet(
        ids=tuple(f"c{i}" for i in range(6)),
        objectives=objectives,
        column_names=("torque", "ripple", "volume"),
        senses=("max", "min", "min"),
    )
