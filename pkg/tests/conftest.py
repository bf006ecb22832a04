from pathlib import Path

import numpy as np
import pytest

from src.network_model import DiscreteChannel, GaussianChannel, NetworkTopology

NETWORKS = Path(__file__).resolve().parent.parent / "networks"


def bsc(p: float) -> np.ndarray:
    return np.array([[1 - p, p], [p, 1 - p]])


def cascade_channel(flip: float = 0.15) -> DiscreteChannel:
    """Y1 = X1 xor X2, Y2 = BSC(flip)(Y1)"""
    tensor = np.zeros((2, 2, 2, 2))
    for x1 in range(2):
        for x2 in range(2):
            y1 = x1 ^ x2
            tensor[x1, x2, y1, :] = bsc(flip)[y1]
    return DiscreteChannel((2, 2), (2, 2), tensor)


def two_user_topology() -> NetworkTopology:
    return NetworkTopology.build(2, 2, [("M1", [1], [1]), ("M2", [2], [2])])


@pytest.fixture
def networks_dir() -> Path:
    return NETWORKS


@pytest.fixture
def cascade():
    return two_user_topology(), cascade_channel()


@pytest.fixture
def cic2():
    return two_user_topology()


@pytest.fixture
def cic3():
    topology = NetworkTopology.build(3, 3, [("M1", [1], [1]), ("M2", [2], [2]), ("M3", [3], [3])])
    gains = np.array([[1.0, 1.0, 1.0], [0.5, 1.0, 1.0], [0.5, 0.5, 1.0]])
    return topology, GaussianChannel(gains, np.ones(3))


@pytest.fixture
def main4():
    topology = NetworkTopology.build(
        4, 2, [("M1", [1], [1]), ("M2", [2], [1]), ("M3", [3], [2]), ("M4", [4], [2])]
    )
    gains = np.array([[1.0, 1.0, 1.0, 1.0], [0.5, 0.5, 0.8, 0.8]])
    return topology, GaussianChannel(gains, np.ones(4))


@pytest.fixture
def mac_common():
    return NetworkTopology.build(2, 1, [("M1", [1], [1]), ("M2", [2], [1]), ("M0", [1, 2], [1])])


@pytest.fixture
def cooperative_main():
    return NetworkTopology.build(
        4, 2,
        [("M1", [1], [1]), ("M2", [2], [1]), ("M3", [3, 4], [2]), ("M4", [3], [2]), ("M5", [4], [2])],
    )


@pytest.fixture
def main3_partial():
    """Three-receiver MAIN with i transmitters for receiver i; Y1 misses X5 X6 and Y2 misses X6"""
    topology = NetworkTopology.build(
        6, 3,
        [("M1", [1], [1]), ("M2", [2], [2]), ("M3", [3], [2]),
         ("M4", [4], [3]), ("M5", [5], [3]), ("M6", [6], [3])],
    )
    gains = np.array([
        [1.0, 0.9, 0.9, 0.7, 0.0, 0.0],
        [0.6, 1.0, 1.0, 0.6, 0.6, 0.0],
        [0.4, 0.5, 0.5, 1.0, 1.0, 1.0],
    ])
    return topology, GaussianChannel(gains, np.ones(6))


@pytest.fixture
def many_to_one_discrete():
    """Y1 = BSC(0.1)(X1), Y2 = BSC(0.2)(X2), Y3 = BSC(0.05)(X1 xor X2 xor X3)"""
    topology = NetworkTopology.build(3, 3, [("M1", [1], [1]), ("M2", [2], [2]), ("M3", [3], [3])])
    tensor = np.zeros((2,) * 6)
    for x1 in range(2):
        for x2 in range(2):
            for x3 in range(2):
                y3 = bsc(0.05)[x1 ^ x2 ^ x3]
                tensor[x1, x2, x3] = np.einsum("a,b,c->abc", bsc(0.1)[x1], bsc(0.2)[x2], y3)
    return topology, DiscreteChannel((2, 2, 2), (2, 2, 2), tensor)
