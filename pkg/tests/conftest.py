import numpy as np
import pytest

from hypflow.geometry import Background, BackgroundGeometry, RadialGrid


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def h4():
    return BackgroundGeometry(Background.HYPERBOLIC, 4)


@pytest.fixture
def h3():
    return BackgroundGeometry(Background.HYPERBOLIC, 3)


@pytest.fixture
def h2():
    return BackgroundGeometry(Background.HYPERBOLIC, 2)


@pytest.fixture
def e2():
    return BackgroundGeometry(Background.EUCLIDEAN, 2)


@pytest.fixture
def e4():
    return BackgroundGeometry(Background.EUCLIDEAN, 4)


@pytest.fixture
def grid_small():
    return RadialGrid(3.0, 64)
