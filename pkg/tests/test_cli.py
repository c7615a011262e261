from __future__ import annotations

import json
import os

import pytest

from gammaod import cli, reporting

GOLDEN = dict(line.strip().split(": ", 1) for line in
              open(os.path.join(os.path.dirname(__file__), "golden", "headers.txt")))


def _header(path):
    with open(path) as fh:
        return fh.readline().strip()


def test_parse_times():
    ts = cli.parse_times("10:1e6:geom32")
    assert len(ts) == 32 and ts[0] == pytest.approx(10) and ts[-1] == pytest.approx(1e6)
    assert cli.parse_times("10,100") == (10.0, 100.0)
    assert cli.parse_times("0:1:lin3") == (0.0, 0.5, 1.0)
    with pytest.raises(cli.BadInput):
        cli.parse_times("ten")


def test_diagnose_power(tmp_path, capsys):
    assert cli.main(["diagnose", "power:2", "--t", "10:1e6:geom32", "--out", str(tmp_path), "--svg"]) == 0
    csv_path = tmp_path / "power_2.diag.csv"
    assert _header(csv_path) == GOLDEN["diag.csv"]
    assert len(csv_path.read_text().splitlines()) == 33
    data = json.loads((tmp_path / "power_2.verdicts.json").read_text())
    assert data["fits"]["v"]["exponent"] == pytest.approx(-1.0, abs=1e-6)
    assert (tmp_path / "power_2.diag.svg").read_text().startswith("<svg")
    assert reporting.verify_manifest(str(tmp_path / "manifest.json")) == []


def test_diagnose_pure_exp_not_applicable(tmp_path):
    assert cli.main(["diagnose", "pure_exp", "--t", "10:1e3:geom16", "--out", str(tmp_path)]) == 0
    data = json.loads((tmp_path / "pure_exp.verdicts.json").read_text())
    v = {d["criterion"]: d["verdict"] for d in data["verdicts"]}
    assert v["slln"] == "not-applicable" and v["wlln_v"] == "fails"


def test_diagnose_fstar_concavity(tmp_path):
    assert cli.main(["diagnose", "fstar:power:1@arith:2:1", "--t", "10:1e4:geom16",
                     "--out", str(tmp_path)]) == 0
    data = json.loads((tmp_path / "fstar_power_1_arith_2_1.verdicts.json").read_text())
    v = {d["criterion"]: d["verdict"] for d in data["verdicts"]}
    assert v["lnF_concave"] == "fails"


def test_unknown_id_exit_2(tmp_path, capsys):
    assert cli.main(["diagnose", "nope:1", "--out", str(tmp_path)]) == 2
    assert "unknown integrand" in capsys.readouterr().err


def test_bad_flags_exit_2():
    assert cli.main(["simulate", "teleport", "const:1"]) == 2


def test_simulate_files_and_determinism(tmp_path):
    args = ["simulate", "wlln", "const:1", "--t", "10,100", "--reps", "300", "--eps", "0.1",
            "--seed", "42"]
    a, b = tmp_path / "a", tmp_path / "b"
    assert cli.main(args + ["--out", str(a)]) == 0
    assert cli.main(args + ["--out", str(b), "--jobs", "2"]) == 0
    for name in ("const_1.wlln.report.json", "const_1.wlln.report.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    assert _header(a / "const_1.wlln.report.csv") == GOLDEN["report.csv"]
    m = json.loads((a / "manifest.json").read_text())
    assert m["seed"] == 42 and len(m["outputs"]) == 2
    assert reporting.verify_manifest(str(a / "manifest.json")) == []


def test_simulate_bridge(tmp_path, capsys):
    assert cli.main(["simulate", "bridge", "power:1", "--t", "50.5", "--reps", "200",
                     "--out", str(tmp_path)]) == 0
    rep = json.loads((tmp_path / "power_1.bridge.report.json").read_text())
    rate = [e for e in rep["estimates"] if e["statistic"] == "sandwich_pass_rate"][0]
    assert rate["value"] == 1.0


def test_simulate_usage_errors_exit_2(tmp_path):
    assert cli.main(["simulate", "dist-limit", "power:1", "--out", str(tmp_path)]) == 2
    assert cli.main(["simulate", "wlln", "power:1", "--reps", "5", "--out", str(tmp_path)]) == 2


def test_simulate_infeasible_grid_exit_3(tmp_path):
    assert cli.main(["simulate", "wlln", "const:1", "--t", "1e6", "--step", "1e-4",
                     "--out", str(tmp_path)]) == 3


def test_config_file_and_override(tmp_path):
    conf = tmp_path / "exp.yaml"
    conf.write_text("schema_version: 1\nt_schedule: [10, 100]\nreplicates: 200\nepsilon: 0.2\n")
    assert cli.main(["simulate", "wlln", "const:1", "--config", str(conf), "--eps", "0.3",
                     "--out", str(tmp_path)]) == 0
    m = json.loads((tmp_path / "manifest.json").read_text())
    assert m["config"]["epsilon"] == 0.3 and m["config"]["replicates"] == 200
    bad = tmp_path / "bad.yaml"
    bad.write_text("replicates: 200\n")
    assert cli.main(["simulate", "wlln", "const:1", "--config", str(bad), "--out", str(tmp_path)]) == 2


def test_table_command(tmp_path):
    assert cli.main(["table", "--out", str(tmp_path), "--points", "16"]) == 0
    path = tmp_path / "a5_table.csv"
    assert _header(path) == GOLDEN["a5_table.csv"]
    assert len(path.read_text().splitlines()) == 1 + 8 * 5


def test_list_catalog(capsys):
    assert cli.main(["list-catalog"]) == 0
    out = capsys.readouterr().out
    assert "power:A" in out and "periodic:BASE" in out


def test_manifest_detects_tampering(tmp_path):
    cli.main(["diagnose", "power:1", "--t", "10:1e3:geom8", "--out", str(tmp_path)])
    (tmp_path / "power_1.diag.csv").write_text("tampered\n")
    assert reporting.verify_manifest(str(tmp_path / "manifest.json")) == ["checksum mismatch for power_1.diag.csv"]


def test_svg_plot_drops_bad_points():
    svg = reporting.svg_lineplot([1, 10, 100], {"v": [1.0, 0.0, 0.01]})
    assert "polyline" in svg
