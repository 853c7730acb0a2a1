import numpy as np
import pytest

from fieldfront import domains, make_icosphere
from fieldfront.field import compute_field


@pytest.fixture(scope="session")
def square10():
    return domains.square_grid(10)


@pytest.fixture(scope="session")
def square10_cross(square10):
    return compute_field(square10, 4)


@pytest.fixture(scope="session")
def disk():
    # unit disk meshed at spacing 0.05 (matches h = diameter / 40)
    return domains.unit_disk(0.05)


@pytest.fixture(scope="session")
def disk_asterisk(disk):
    return compute_field(disk, 6)


@pytest.fixture(scope="session")
def annulus_mesh():
    return domains.annulus(0.5, 1.0, 0.1)


@pytest.fixture(scope="session")
def sphere2():
    return make_icosphere(2)


@pytest.fixture(scope="session")
def sphere3():
    return make_icosphere(3)


@pytest.fixture(scope="session")
def sphere3_asterisk(sphere3):
    return compute_field(sphere3, 6)


@pytest.fixture()
def rng():
    return np.random.default_rng(12345)
