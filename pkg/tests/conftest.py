import numpy as np
import pytest

from vlptrack import RoomConfig, build_room


@pytest.fixture
def room():
    return RoomConfig()


@pytest.fixture
def aps(room):
    return build_room(room)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
