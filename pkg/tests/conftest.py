import pytest

from menger.fixtures import antipodal_perm, circle_space, rotation_perm
from menger.space import GroupAction


@pytest.fixture(scope="session")
def circle9():
    return circle_space(9)


@pytest.fixture(scope="session")
def rot3_action(circle9):
    return GroupAction.from_generators(circle9, [rotation_perm(9, 3)])


@pytest.fixture(scope="session")
def circle8():
    return circle_space(8)


@pytest.fixture(scope="session")
def antipodal_action(circle8):
    return GroupAction.from_generators(circle8, [antipodal_perm(8)])
