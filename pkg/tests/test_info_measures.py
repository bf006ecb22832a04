import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from src.errors import BadParamsError, DimensionMismatchError
from src.info_measures import (EncoderSpec, JointPmf, Variable, ck_identity_residual, cond_mutual_information,
                               induced_joint, random_pmf, sequence_joint)
from src.network_model import DiscreteChannel, NetworkTopology


def binary_entropy(p: float) -> float:
    return float(-p * np.log2(p) - (1 - p) * np.log2(1 - p))


def link(tensor: np.ndarray):
    topology = NetworkTopology.build(1, 1, [("M1", [1], [1])])
    return topology, DiscreteChannel((2,), (2,), tensor)


def uniform_identity_spec() -> EncoderSpec:
    return EncoderSpec(np.array([1.0]), {"M1": np.array([0.5, 0.5])}, {1: np.array([[0], [1]])})


def test_noiseless_link_carries_one_bit():
    topology, channel = link(np.eye(2))
    joint = induced_joint(topology, channel, uniform_identity_spec())
    assert cond_mutual_information(joint, ["M1"], ["Y1"]) == pytest.approx(1.0, abs=1e-12)


def test_constant_encoder_carries_nothing():
    topology, channel = link(np.eye(2))
    spec = EncoderSpec(np.array([1.0]), {"M1": np.array([0.5, 0.5])}, {1: np.array([[0], [0]])})
    joint = induced_joint(topology, channel, spec)
    assert cond_mutual_information(joint, ["M1"], ["Y1"]) == pytest.approx(0.0, abs=1e-12)


def test_bsc_link():
    topology, channel = link(np.array([[0.89, 0.11], [0.11, 0.89]]))
    joint = induced_joint(topology, channel, uniform_identity_spec())
    assert cond_mutual_information(joint, ["X1"], ["Y1"]) == pytest.approx(1 - binary_entropy(0.11), abs=1e-12)


def test_induced_joint_marginals(cascade):
    topology, channel = cascade
    rng = np.random.default_rng(3)
    spec = EncoderSpec(
        random_pmf(rng, [2]),
        {"M1": random_pmf(rng, [3]), "M2": random_pmf(rng, [2])},
        {1: np.array([[0, 1], [1, 1], [0, 0]]), 2: np.array([[1, 0], [0, 1]])},
    )
    joint = induced_joint(topology, channel, spec)
    np.testing.assert_allclose(joint.marginal(["M1", "M2"]), np.outer(spec.message_pmfs["M1"], spec.message_pmfs["M2"]),
                               atol=1e-12)
    xy = joint.marginal(["X1", "X2", "Y1", "Y2"])
    px = xy.sum(axis=(2, 3))
    for x1 in range(2):
        for x2 in range(2):
            if px[x1, x2] > 1e-9:
                np.testing.assert_allclose(xy[x1, x2] / px[x1, x2], channel.transition[x1, x2], atol=1e-12)


def test_encoder_shape_is_checked(cascade):
    topology, channel = cascade
    spec = EncoderSpec(np.array([1.0]), {"M1": np.array([0.5, 0.5]), "M2": np.array([1.0])},
                       {1: np.array([[0], [1]]), 2: np.array([[0], [1]])})
    with pytest.raises(DimensionMismatchError):
        induced_joint(topology, channel, spec)


def test_independent_variables_have_zero_information():
    roster = [Variable("A", "aux", 3), Variable("B", "aux", 2)]
    joint = JointPmf(roster, np.outer([0.2, 0.3, 0.5], [0.6, 0.4]))
    assert cond_mutual_information(joint, ["A"], ["B"]) == pytest.approx(0.0, abs=1e-12)


def test_copy_of_uniform_quaternary_is_two_bits():
    roster = [Variable("A", "aux", 4), Variable("B", "aux", 4)]
    joint = JointPmf(roster, np.eye(4) / 4)
    assert cond_mutual_information(joint, ["A"], ["B"]) == pytest.approx(2.0, abs=1e-12)


def test_overlapping_sets_raise():
    joint = JointPmf([Variable("A", "aux", 2)], np.array([0.5, 0.5]))
    with pytest.raises(BadParamsError):
        cond_mutual_information(joint, ["A"], ["A"])


def test_unnormalized_joint_raises():
    with pytest.raises(BadParamsError):
        JointPmf([Variable("A", "aux", 2)], np.array([0.5, 0.6]))


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(min_value=0, max_value=2 ** 32 - 1))
def test_chain_rule(seed):
    rng = np.random.default_rng(seed)
    roster = [Variable("A", "aux", 2), Variable("B", "aux", 3), Variable("C", "aux", 2)]
    joint = JointPmf(roster, random_pmf(rng, [2, 3, 2]))
    whole = cond_mutual_information(joint, ["A"], ["B", "C"])
    parts = cond_mutual_information(joint, ["A"], ["C"]) + cond_mutual_information(joint, ["A"], ["B"], ["C"])
    assert abs(whole - parts) <= 1e-12
    assert cond_mutual_information(joint, ["A"], ["B"], ["C"]) == pytest.approx(
        cond_mutual_information(joint, ["B"], ["A"], ["C"]), abs=1e-12)


def test_ck_identity_length_one_is_exact():
    joint = sequence_joint(np.random.default_rng(0), 1, 3, 2)
    assert ck_identity_residual(joint, 1) == 0.0


def test_ck_identity_independent_sequences():
    rng = np.random.default_rng(1)
    a, b = random_pmf(rng, [2]), random_pmf(rng, [2])
    tensor = np.einsum("i,j,k,l->ijkl", a, a, b, b)
    roster = [Variable(name, "output", 2) for name in ("A1", "A2", "B1", "B2")]
    assert ck_identity_residual(JointPmf(roster, tensor), 2) <= 1e-12


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(min_value=0, max_value=2 ** 32 - 1), n=st.integers(min_value=2, max_value=4),
       side=st.sampled_from([None, 2, 3]))
def test_ck_identity_random_joints(seed, n, side):
    joint = sequence_joint(np.random.default_rng(seed), n, 3, 2, side)
    assert ck_identity_residual(joint, n, side="S" if side else None) <= 1e-12


def test_ck_identity_on_a_thousand_seeded_joints():
    rng = np.random.default_rng(np.random.SeedSequence(2024))
    worst = 0.0
    for k in range(1000):
        n = 2 + k % 3
        side = None if k % 2 else int(rng.integers(2, 4))
        joint = sequence_joint(rng, n, int(rng.integers(2, 4)), int(rng.integers(2, 4)), side)
        worst = max(worst, ck_identity_residual(joint, n, side="S" if side else None))
    assert worst <= 1e-12


def test_joint_round_trip_through_dict(cascade):
    topology, channel = cascade
    spec = EncoderSpec(np.array([1.0]), {"M1": np.array([0.5, 0.5]), "M2": np.array([0.25, 0.75])},
                       {1: np.array([[0], [1]]), 2: np.array([[1], [0]])})
    joint = induced_joint(topology, channel, spec)
    again = JointPmf.from_dict(joint.to_dict())
    assert again.names == joint.names
    assert cond_mutual_information(again, ["M1"], ["Y1"], ["M2"]) == pytest.approx(
        cond_mutual_information(joint, ["M1"], ["Y1"], ["M2"]), abs=1e-12)
