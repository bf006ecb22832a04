import numpy as np
import pytest

from src.capacity_analyzer import CapacityAnalyzer, CapacityStatus, capacity_report
from src.errors import BadParamsError
from src.gaussian import psi
from src.grid_search import SearchCaps
from src.network_model import GaussianChannel, NetworkTopology


def test_degraded_cascade_reaches_capacity(cascade):
    topology, channel = cascade
    report = capacity_report(topology, channel, "T3", caps=SearchCaps(grid=8, quiet=True))
    assert report["status"] == CapacityStatus.CAPACITY.value
    assert [c["status"] for c in report["conditions"]] == ["HOLDS"]
    assert report["pointwise_achievable_below_outer"]
    assert report["outer"]["evaluations"] == 1296
    assert abs(report["gap"]) <= report["tolerances"]["gap"]
    assert "discrete maxima are grid-certified only" in report["notes"]


def test_reversed_receivers_are_inconclusive(cascade):
    topology, channel = cascade
    report = capacity_report(topology.permute_receivers([2, 1]), channel.permute_receivers([2, 1]), "T3",
                             caps=SearchCaps(grid=4, quiet=True), budget=500)
    assert report["status"] == CapacityStatus.INCONCLUSIVE.value
    assert report["conditions"][0]["status"] == "VIOLATED"
    assert report["outer"] is None
    assert report["gap"] is None
    assert report["achievable"]["value"] >= 0.0


def test_gaussian_main_capacity(main4):
    topology, channel = main4
    report = capacity_report(topology, channel, "T4")
    assert report["scheme"] == "SUCCESSIVE_JOINT"
    assert report["status"] == CapacityStatus.CAPACITY.value
    assert report["outer"]["value"] == pytest.approx(psi(4.0), abs=1e-9)
    assert report["achievable"]["value"] == pytest.approx(1.160964, abs=1e-6)
    assert report["argmax_check"]["passed"]
    assert report["argmax_check"]["certificate"] == "primary"
    assert report["outer"]["certification"] == "Gaussian-restricted optimum"


def test_gaussian_main_unequal_ratios(main4):
    topology, _ = main4
    channel = GaussianChannel(np.array([[1.0, 1.0, 1.0, 1.0], [0.5, 0.7, 0.8, 0.8]]), np.ones(4))
    report = capacity_report(topology, channel, "T4")
    assert report["status"] == CapacityStatus.INCONCLUSIVE.value
    assert report["conditions"][0]["status"] == "UNKNOWN"


def test_default_tolerances(cascade, main4):
    assert CapacityAnalyzer(*cascade, quiet=True).tolerance == 0.02
    assert CapacityAnalyzer(*main4, quiet=True).tolerance == 1e-6


def test_theorem_without_capacity_path(main4):
    with pytest.raises(BadParamsError):
        capacity_report(*main4, "SI3")


def test_reports_are_deterministic(cascade):
    topology, channel = cascade
    first = capacity_report(topology, channel, "T3", caps=SearchCaps(grid=4, quiet=True))
    second = capacity_report(topology, channel, "T3", caps=SearchCaps(grid=4, quiet=True))
    assert first["outer"]["value"] == second["outer"]["value"]
    assert first["achievable"]["value"] == second["achievable"]["value"]
    assert first["status"] == second["status"]


def test_degraded_cascade_at_full_resolution(cascade):
    topology, channel = cascade
    report = capacity_report(topology, channel, "T3", caps=SearchCaps(grid=16, quiet=True))
    assert report["outer"]["evaluations"] == 17 * 17 * 16
    assert report["gap"] <= 0.02
    assert report["pointwise_achievable_below_outer"]
    assert report["conditions"][0]["certificate"]["kind"] == "degrading_matrix"


def six_transmitter_main(y1_gains, y2_gains):
    topology = NetworkTopology.build(
        6, 2, [("M1", [1], [1]), ("M2", [2], [1]), ("M3", [3], [1]),
               ("M4", [4], [2]), ("M5", [5], [2]), ("M6", [6], [2])],
    )
    return topology, GaussianChannel(np.array([y1_gains, y2_gains], dtype=float), np.ones(6))


def test_gaussian_main_with_three_shared_messages():
    topology, channel = six_transmitter_main([1.0] * 6, [0.5, 0.5, 0.5, 0.8, 0.8, 0.8])
    report = capacity_report(topology, channel, "T4")
    assert [c["status"] for c in report["conditions"]] == ["HOLDS", "HOLDS"]
    assert report["argmax_check"]["passed"]
    assert report["argmax_check"]["certificate"] == "primary"
    assert report["status"] != CapacityStatus.INCONCLUSIVE.value
    assert report["outer"]["value"] >= report["achievable"]["value"] - 1e-9


def test_failed_argmax_check_bounds_instead_of_failing():
    # X4 is heard better at Y2, X5 and X6 better at Y1 given the rest
    topology, channel = six_transmitter_main([1.0, 1.0, 1.0, 2.0, 0.5, 0.5], [0.5, 0.5, 0.5, 1.8, 0.45, 0.45])
    report = capacity_report(topology, channel, "T4")
    assert [c["status"] for c in report["conditions"]] == ["HOLDS", "HOLDS"]
    gate = report["argmax_check"]
    assert not gate["passed"]
    assert gate["certificate"] is None
    assert gate["verdict"]["alternative_holds"] == {"all_reversed": False}
    assert report["status"] == CapacityStatus.BOUNDED.value
    assert any("argmax comparisons fail" in note for note in report["notes"])
