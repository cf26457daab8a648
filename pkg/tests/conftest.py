import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from lapdeform import TetMesh, synth_shape


@pytest.fixture
def unit_tet():
    """Canonical simplex: (0,0,0), (1,0,0), (0,1,0), (0,0,1); volume 1/6."""
    return TetMesh(
        [[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1]],
        [[0, 1, 2, 3]],
    )


@pytest.fixture(scope="session")
def bar3():
    return synth_shape("bar", 3, 0)


@pytest.fixture(scope="session")
def fixture_meshes():
    return {
        "bar": synth_shape("bar", 3, 0),
        "ellipsoid": synth_shape("ellipsoid", 3, 0),
        "lshape": synth_shape("lshape", 2, 0),
    }


@pytest.fixture
def rng():
    return np.random.default_rng(0)
