import hypothesis
import pytest

from toral_nodal.fixtures import circular_fixture, cubic_fixture, ellipse_fixture
from toral_nodal.lattice import enumerate_circle

hypothesis.settings.register_profile(
    "suite", deadline=None, max_examples=25, derandomize=True)
hypothesis.settings.load_profile("suite")


@pytest.fixture(scope="session")
def circ():
    return circular_fixture()


@pytest.fixture(scope="session")
def ell():
    return ellipse_fixture()


@pytest.fixture(scope="session")
def cub():
    return cubic_fixture()


@pytest.fixture(scope="session")
def all_curves(circ, ell, cub):
    return [circ, ell, cub]


@pytest.fixture(scope="session")
def circle25():
    return enumerate_circle(25)


@pytest.fixture(scope="session")
def circle1105():
    return enumerate_circle(1105)
