import numpy as np
import pytest

from biharm.mesh import Mesh, load_mesh


def two_triangle_square():
    return Mesh([[0, 0], [1, 0], [1, 1], [0, 1]], [[0, 1, 2], [0, 2, 3]])


def reference_triangle():
    return Mesh([[0, 0], [1, 0], [0, 1]], [[0, 1, 2]])


@pytest.fixture
def square():
    return two_triangle_square()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
