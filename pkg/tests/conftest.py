import numpy as np
import pytest

from MTE.bifurcation.shooting import find_root, scan_sign_changes
from MTE.reduction.metric_profile import build_geometry

"""
Geometries
"""


@pytest.fixture(scope="session")
def geometry_half():
    return build_geometry(0.5)


@pytest.fixture(scope="session")
def geometry_round():
    return build_geometry(1.0)


@pytest.fixture(scope="session")
def geometry_two():
    return build_geometry(2.0)


"""
Closed geodesics
"""


@pytest.fixture(scope="session")
def b11_root(geometry_half):
    # First sign change of f_1 at a = 0.5 < 1/sqrt(3), s > 0
    brackets = scan_sign_changes(geometry_half, 1, np.linspace(0.02, 0.95, 94))
    return find_root(geometry_half, 1, brackets[0])


"""
Output
"""


@pytest.fixture
def out_dir(tmp_path):
    path = tmp_path / "out"
    path.mkdir()
    return path
