import numpy as np
import pytest

from src.errors import BadParamsError
from src.message_plan import (PermutationPlan, all_permutation_plans, build_plan, lambda_sets, nesting_holds,
                              reduce_and_star, reduce_messages)
from src.network_model import GaussianChannel, NetworkTopology, connectivity


def test_single_message_plan():
    plan = build_plan(NetworkTopology.build(1, 1, [("M", [1], [1])]))
    assert list(plan.nodes) == [frozenset({1})]
    assert plan.edges == ()


def test_mac_common_plan(mac_common):
    plan = build_plan(mac_common)
    assert sorted(plan.columns) == [1, 2]
    assert set(plan.edges) == {(frozenset({1}), frozenset({1, 2})), (frozenset({2}), frozenset({1, 2}))}


def test_main4_plan_has_one_column(main4):
    plan = build_plan(main4[0])
    assert list(plan.columns) == [1]
    assert len(plan.nodes) == 4
    assert plan.edges == ()


def test_singleton_groups_keep_everything(cic2):
    reduction = reduce_messages(cic2)
    assert reduction.m_tilde == cic2.all_messages


def test_theta_prefers_smallest_last_receiver():
    topology = NetworkTopology.build(1, 2, [("A", [1], [1]), ("B", [1], [2])])
    reduction = reduce_messages(topology)
    assert reduction.theta[frozenset({1})] == 1
    assert reduction.m_tilde == frozenset({"A"})

    topology = NetworkTopology.build(1, 3, [("A", [1], [1, 3]), ("B", [1], [2])])
    reduction = reduce_messages(topology)
    assert reduction.theta[frozenset({1})] == 2
    assert reduction.m_tilde == frozenset({"B"})


def test_theta_tie_break_is_lexicographic():
    topology = NetworkTopology.build(1, 3, [("A", [1], [2, 3]), ("B", [1], [1, 3])])
    assert reduce_messages(topology).selected[frozenset({1})] == "B"


def test_mac_common_keeps_the_common_message(mac_common):
    assert reduce_and_star(mac_common).m_star == frozenset({"M0"})


def test_cic_keeps_every_message(cic2):
    assert reduce_and_star(cic2).m_star == cic2.all_messages


def test_cooperative_main_has_one_starred_message_at_y2(cooperative_main):
    reduction = reduce_and_star(cooperative_main)
    assert reduction.m_star_per_receiver[2] == frozenset({"M3"})
    assert reduction.m_star <= reduction.m_tilde <= cooperative_main.all_messages
    assert reduction.m_star


def test_reduction_report_is_sorted(mac_common):
    data = reduce_and_star(mac_common).to_dict()
    assert data["m_star"] == ["M0"]
    assert data["m_tilde"] == ["M0", "M1", "M2"]
    assert data["theta"] == {"1": 1, "2": 1, "1,2": 1}


def test_lambda_sets_worked_example(main3_partial):
    topology, channel = main3_partial
    reduction = reduce_and_star(topology)
    plan = lambda_sets(reduction, connectivity(topology, channel),
                       PermutationPlan.from_params(3, {"2": [1], "3": [1, 2]}))
    assert plan.sets[2][1] == frozenset()
    assert plan.sets[3][1] == frozenset({"M5", "M6"})
    assert plan.sets[3][2] == frozenset({"M6"})
    assert nesting_holds(plan, reduction)


def test_lambda_sets_fully_connected_are_empty(cic3):
    topology, channel = cic3
    plan = lambda_sets(reduce_and_star(topology), connectivity(topology, channel), PermutationPlan.identity(3))
    assert all(not s for by_theta in plan.sets.values() for s in by_theta.values())


def test_lambda_sets_tin_regime(cic2):
    channel = GaussianChannel(np.array([[1.0, 0.0], [0.7, 1.0]]), np.ones(2))
    reduction = reduce_and_star(cic2)
    plan = lambda_sets(reduction, connectivity(cic2, channel), PermutationPlan.identity(2))
    assert plan.sets[2][1] == reduction.effective_demands[2]


def test_invalid_permutation(cic3):
    topology, channel = cic3
    with pytest.raises(BadParamsError):
        lambda_sets(reduce_and_star(topology), connectivity(topology, channel),
                    PermutationPlan.from_params(3, {"3": [1, 1]}))


def test_all_permutation_plans_counts():
    assert len(list(all_permutation_plans(3))) == 2
    assert len(list(all_permutation_plans(4))) == 12
