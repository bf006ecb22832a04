import numpy as np
import pytest

from src.errors import DimensionMismatchError, UnknownMessageError
from src.network_model import (DiscreteChannel, GaussianChannel, NetworkTopology, connectivity, inputs_for,
                               sorted_ids, validate_topology)


def test_cic2_is_valid(cic2):
    channel = GaussianChannel(np.array([[1.0, 0.3], [0.4, 1.0]]), np.ones(2))
    result = validate_topology(cic2, channel)
    assert result.ok
    assert result.violations == []


def test_message_without_receiver_is_reported():
    topology = NetworkTopology.build(2, 2, [("M1", [1], [1]), ("M2", [2], [])])
    result = validate_topology(topology)
    assert not result.ok
    assert any("demand union" in v for v in result.violations)


def test_reserved_and_duplicate_ids_are_reported():
    topology = NetworkTopology.build(1, 1, [("X1", [1], [1]), ("M", [1], [1]), ("M", [1], [1])])
    violations = validate_topology(topology).violations
    assert any("reserved" in v for v in violations)
    assert any("duplicate" in v for v in violations)


def test_unconnected_message_demanded_elsewhere_is_fine(main4):
    topology, _ = main4
    # Y1 does not hear X3, but M3 is demanded only by Y2
    channel = GaussianChannel(np.array([[1.0, 1.0, 0.0, 1.0], [0.5, 0.5, 1.0, 1.0]]), np.ones(4))
    assert validate_topology(topology, channel).ok


def test_demanded_message_behind_unconnected_transmitter(main4):
    topology, _ = main4
    channel = GaussianChannel(np.array([[0.0, 1.0, 1.0, 1.0], [0.5, 0.5, 1.0, 1.0]]), np.ones(4))
    result = validate_topology(topology, channel)
    assert not result.ok
    assert any("M1" in v and "unconnected" in v for v in result.violations)


def test_gaussian_zero_gain_is_unconnected():
    topology = NetworkTopology.build(3, 1, [("A", [1], [1]), ("B", [2], [1]), ("C", [3], [1])])
    report = connectivity(topology, GaussianChannel(np.array([[1.0, 0.5, 0.0]]), np.ones(3)))
    assert report.unconnected_transmitters(1) == frozenset({3})
    assert report.unconnected_messages(1) == frozenset({"C"})
    assert not report.is_fully_connected()


def test_partial_main_connectivity(main3_partial):
    topology, channel = main3_partial
    report = connectivity(topology, channel)
    assert report.unconnected_transmitters(1) == frozenset({5, 6})
    assert report.unconnected_transmitters(2) == frozenset({6})
    assert report.unconnected_transmitters(3) == frozenset()
    assert report.unconnected_messages(1) == frozenset({"M5", "M6"})


def test_constant_output_is_unconnected_to_everyone(cic2):
    tensor = np.zeros((2, 2, 2, 2))
    for x1 in range(2):
        for x2 in range(2):
            tensor[x1, x2, :, x2] = [0.3, 0.7]
    report = connectivity(cic2, DiscreteChannel((2, 2), (2, 2), tensor))
    assert report.unconnected_transmitters(1) == frozenset({1, 2})
    assert report.unconnected_transmitters(2) == frozenset({1})


def test_connectivity_matches_gain_pattern(cascade):
    topology, channel = cascade
    assert connectivity(topology, channel) == connectivity(topology, channel)
    assert connectivity(topology, channel).is_fully_connected()


def test_dimension_mismatch(cic2):
    with pytest.raises(DimensionMismatchError):
        connectivity(cic2, GaussianChannel(np.ones((2, 3)), np.ones(3)))


def test_inputs_for(main4):
    topology, _ = main4
    assert inputs_for(topology, topology.all_messages) == frozenset({1, 2, 3, 4})
    assert inputs_for(topology, []) == frozenset()
    assert inputs_for(topology, topology.demanded_by(2)) == frozenset({3, 4})
    with pytest.raises(UnknownMessageError):
        inputs_for(topology, ["M9"])


def test_effective_demands_partition_the_demands():
    topology = NetworkTopology.build(2, 3, [("A", [1], [1, 3]), ("B", [2], [2]), ("C", [1, 2], [1, 2])])
    effective = topology.effective_demands()
    assert effective == {1: frozenset(), 2: frozenset({"B", "C"}), 3: frozenset({"A"})}
    assert frozenset().union(*effective.values()) == topology.all_messages


def test_permute_receivers(cascade):
    topology, channel = cascade
    swapped = topology.permute_receivers([2, 1])
    assert swapped.demanded_by(1) == frozenset({"M2"})
    flipped = channel.permute_receivers([2, 1])
    np.testing.assert_allclose(flipped.receiver_marginal([1]), channel.receiver_marginal([2]))
    with pytest.raises(DimensionMismatchError):
        topology.permute_receivers([1, 1])


def test_sorted_ids_is_natural():
    assert sorted_ids(["M10", "M2", "M1"]) == ["M1", "M2", "M10"]
