import numpy as np
import pytest

from src.errors import CapExceededError, EmptyArgmaxError
from src.grid_search import GridSpace, SearchCaps, argmax_indices, brute_force_max, grid_values, simplex_grid
from src.network_model import DiscreteChannel, NetworkTopology
from src.rates import SumRateExpression

atom = SumRateExpression.atom_of


def link(tensor):
    return NetworkTopology.build(1, 1, [("M1", [1], [1])]), DiscreteChannel((2,), (2,), tensor)


def test_simplex_grid_rows():
    np.testing.assert_allclose(simplex_grid(2, 2), [[1.0, 0.0], [0.5, 0.5], [0.0, 1.0]])
    rows = simplex_grid(3, 4)
    assert rows.shape == (15, 3)
    np.testing.assert_allclose(rows.sum(axis=1), 1.0)


def test_cascade_grid_size(cascade):
    topology, channel = cascade
    assert GridSpace(topology, channel, SearchCaps(grid=8, quiet=True)).size == 1296


def test_grid_cap(cascade):
    topology, channel = cascade
    with pytest.raises(CapExceededError) as info:
        GridSpace(topology, channel, SearchCaps(grid=8, max_evaluations=10, quiet=True))
    assert info.value.estimate == 1296


def test_grid_points_are_valid_encoder_specs(cascade):
    topology, channel = cascade
    space = GridSpace(topology, channel, SearchCaps(grid=4, quiet=True))
    for k in (0, space.size // 2, space.size - 1):
        spec = space.point(k)
        assert spec.q_pmf.sum() == pytest.approx(1.0)
        assert set(spec.encoders) == {1, 2}


def test_empty_argmax():
    with pytest.raises(EmptyArgmaxError):
        argmax_indices(np.array([]), 1e-6)


def test_argmax_keeps_near_ties():
    assert argmax_indices(np.array([0.5, 1.0, 1.0 - 1e-8, 0.2]), 1e-6) == [1, 2]


def test_noiseless_link_maximum_is_one_bit():
    topology, channel = link(np.eye(2))
    result = brute_force_max(topology, channel, atom({"M1"}, {"Y1"}, {"Q"}), SearchCaps(grid=4, quiet=True))
    assert result.value == pytest.approx(1.0, abs=1e-12)
    assert result.evaluations == 20


def test_useless_link_maximum_is_zero():
    topology, channel = link(np.full((2, 2), 0.5))
    result = brute_force_max(topology, channel, atom({"M1"}, {"Y1"}, {"Q"}), SearchCaps(grid=4, quiet=True))
    assert result.value == pytest.approx(0.0, abs=1e-12)


def test_threaded_grid_matches_serial(cascade):
    topology, channel = cascade
    expr = atom({"M1", "M2"}, {"Y1"}, {"Q"})
    serial = grid_values(topology, channel, [expr], SearchCaps(grid=4, quiet=True))
    threaded = grid_values(topology, channel, [expr], SearchCaps(grid=4, jobs=2, quiet=True))
    np.testing.assert_array_equal(serial, threaded)
