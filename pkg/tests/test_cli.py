import json

from typer.testing import CliRunner

from main import app

runner = CliRunner()


def invoke(*args):
    return runner.invoke(app, [*args, "--quiet"])


def test_validate_reports_connectivity(networks_dir):
    result = invoke("validate", "--network", str(networks_dir / "main3_partial.json"))
    assert result.exit_code == 0
    report = json.loads(result.stdout)
    assert report["ok"]
    assert "connectivity" in report


def test_validate_with_violations_still_writes_the_report(tmp_path):
    document = {
        "transmitters": 2,
        "receivers": 1,
        "messages": [{"id": "M1", "delta": [1], "nabla": [1]}, {"id": "M2", "delta": [2], "nabla": [1]}],
        "channel": {"kind": "gaussian", "gains": [[1.0, 0.0]], "powers": [1.0, 1.0]},
    }
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(document), encoding="utf-8")
    out = tmp_path / "report.json"
    result = invoke("validate", "--network", str(path), "--out", str(out))
    assert result.exit_code == 2
    assert json.loads(out.read_text(encoding="utf-8"))["ok"] is False


def test_reduce_common_message(networks_dir):
    result = invoke("reduce", "--network", str(networks_dir / "mac_common.json"))
    assert result.exit_code == 0
    assert json.loads(result.stdout)["reduction"]["m_star"] == ["M0"]


def test_check_cascade(networks_dir):
    result = invoke("check", "--network", str(networks_dir / "bsc_cascade.json"), "--theorem", "T3")
    assert result.exit_code == 0
    assert [v["status"] for v in json.loads(result.stdout)["verdicts"]] == ["HOLDS"]


def test_capacity_cascade(networks_dir):
    result = invoke("capacity", "--network", str(networks_dir / "bsc_cascade.json"), "--theorem", "T3",
                    "--grid", "8")
    assert result.exit_code == 0
    assert json.loads(result.stdout)["status"] == "CAPACITY"


def test_gaussian_main4(networks_dir):
    result = invoke("gaussian", "--network", str(networks_dir / "main4_gaussian.json"), "--model", "main4")
    assert result.exit_code == 0
    report = json.loads(result.stdout)
    assert abs(report["value"] - 1.160964) <= 1e-6
    assert report["capacity"] is True


def test_gaussian_sweep_csv(networks_dir):
    result = invoke("gaussian", "--network", str(networks_dir / "cic3_gaussian.json"), "--model", "cic3",
                    "--sweep", "0:2:3", "--format", "csv")
    assert result.exit_code == 0
    lines = result.stdout.splitlines()
    assert lines[0] == "scale,value,active_branch,capacity"
    assert len(lines) == 4


def test_generic_gaussian_agrees_with_capacity(tmp_path):
    document = {
        "transmitters": 6,
        "receivers": 2,
        "messages": [{"id": f"M{i}", "delta": [i], "nabla": [1 if i <= 3 else 2]} for i in range(1, 7)],
        "channel": {"kind": "gaussian", "gains": [[1.0, 1.0, 1.0, 2.0, 0.5, 0.5], [0.5, 0.5, 0.5, 1.8, 0.45, 0.45]],
                    "powers": [1.0] * 6},
    }
    path = tmp_path / "main6.json"
    path.write_text(json.dumps(document), encoding="utf-8")
    generic = invoke("gaussian", "--network", str(path), "--theorem", "T4")
    capacity = invoke("capacity", "--network", str(path), "--theorem", "T4")
    assert generic.exit_code == 0 and capacity.exit_code == 0
    generic_report, capacity_report = json.loads(generic.stdout), json.loads(capacity.stdout)
    assert generic_report["status"] == capacity_report["status"] == "BOUNDED"
    assert generic_report["capacity"] is False
    assert generic_report["argmax_check"]["passed"] is False


def test_selftest_at_default_size():
    result = invoke("selftest")
    assert result.exit_code == 0
    report = json.loads(result.stdout)
    assert report["ok"] is True
    assert report["samples"] == 1000
    assert report["psi_chain_max_residual"] <= 1e-12
    assert report["ck_identity_max_residual"] <= 1e-12


def test_missing_network_file(tmp_path):
    result = invoke("validate", "--network", str(tmp_path / "absent.json"))
    assert result.exit_code == 2


def test_bad_params_json(networks_dir):
    result = invoke("check", "--network", str(networks_dir / "bsc_cascade.json"), "--theorem", "T3",
                    "--params", "[1, 2]")
    assert result.exit_code == 2


def test_grid_cap_exit_code(networks_dir):
    result = invoke("bound", "--network", str(networks_dir / "bsc_cascade.json"), "--theorem", "T3",
                    "--max-evals", "10")
    assert result.exit_code == 3


def test_unknown_theorem_exit_code(networks_dir):
    result = invoke("check", "--network", str(networks_dir / "bsc_cascade.json"), "--theorem", "T42")
    assert result.exit_code == 4


def test_repeated_runs_are_byte_identical(networks_dir):
    args = ("bound", "--network", str(networks_dir / "bsc_cascade.json"), "--theorem", "T3", "--grid", "4")
    first, second = invoke(*args), invoke(*args)
    assert first.exit_code == second.exit_code == 0
    assert first.stdout == second.stdout
