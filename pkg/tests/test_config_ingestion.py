import json

import numpy as np
import pytest

from src.config_ingestion import NetworkIngester, dump_network, parse_config
from src.errors import ConfigError


def write(tmp_path, document, name="net.json"):
    path = tmp_path / name
    path.write_text(json.dumps(document), encoding="utf-8")
    return str(path)


def link_document(**channel):
    return {
        "transmitters": 1,
        "receivers": 1,
        "messages": [{"id": "M1", "delta": [1], "nabla": [1]}],
        "channel": {"kind": "discrete", "input_alphabets": [2], "output_alphabets": [2], **channel},
    }


def test_loads_the_gaussian_main(networks_dir):
    topology, channel = parse_config(str(networks_dir / "main4_gaussian.json"))
    assert (topology.k1, topology.k2, len(topology.messages)) == (4, 2, 4)
    assert channel.kind == "gaussian"
    np.testing.assert_allclose(channel.gains[1], [0.5, 0.5, 0.8, 0.8])


def test_every_bundled_network_loads(networks_dir):
    for path in sorted(networks_dir.glob("*.json")):
        topology, _ = parse_config(str(path))
        assert topology.k2 >= 1


def test_knowledge_and_demand_tables(networks_dir):
    topology, _ = parse_config(str(networks_dir / "cooperative_main.json"))
    assert topology.label_of("M3").delta == frozenset({3, 4})
    assert topology.label_of("M3").nabla == frozenset({2})
    assert topology.label_of("M1").nabla == frozenset({1})


def test_bad_transition_row(tmp_path):
    path = write(tmp_path, link_document(transition=[[0.5, 0.5], [0.7, 0.7]]))
    with pytest.raises(ConfigError) as info:
        parse_config(path)
    assert any("transition row" in d for d in info.value.details)


def test_negative_power(tmp_path):
    document = {
        "transmitters": 1,
        "receivers": 1,
        "messages": [{"id": "M1", "delta": [1], "nabla": [1]}],
        "channel": {"kind": "gaussian", "gains": [[1.0]], "powers": [-1.0]},
    }
    with pytest.raises(ConfigError):
        parse_config(write(tmp_path, document))


def test_unknown_field_is_rejected(tmp_path):
    document = link_document(transition=[[1.0, 0.0], [0.0, 1.0]])
    document["colour"] = "blue"
    with pytest.raises(ConfigError):
        parse_config(write(tmp_path, document))


def test_malformed_json(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{not json", encoding="utf-8")
    with pytest.raises(ConfigError) as info:
        parse_config(str(path))
    assert "malformed JSON" in str(info.value)


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        NetworkIngester(str(tmp_path / "nowhere.json"), quiet=True).load()


def test_missing_nabla_without_table(tmp_path):
    document = link_document(transition=[[1.0, 0.0], [0.0, 1.0]])
    document["messages"] = [{"id": "M1", "delta": [1]}]
    with pytest.raises(ConfigError):
        parse_config(write(tmp_path, document))


def test_validation_failure_lists_violations(tmp_path):
    document = {
        "transmitters": 2,
        "receivers": 1,
        "messages": [{"id": "M1", "delta": [1], "nabla": [1]}, {"id": "M2", "delta": [2], "nabla": [1]}],
        "channel": {"kind": "gaussian", "gains": [[1.0, 0.0]], "powers": [1.0, 1.0]},
    }
    with pytest.raises(ConfigError) as info:
        parse_config(write(tmp_path, document))
    assert any("M2" in v for v in info.value.details)


def test_dump_round_trip(tmp_path, networks_dir):
    topology, channel = parse_config(str(networks_dir / "bsc_cascade.json"))
    again_topology, again_channel = parse_config(write(tmp_path, dump_network(topology, channel)))
    assert again_topology == topology
    np.testing.assert_array_equal(again_channel.transition, channel.transition)
