import csv
import json
from importlib import resources

import pytest

from catbranch.cli import run


def _config_path(name: str) -> str:
    return str(resources.files("catbranch.configs").joinpath(name))


def test_classify_json_output(capsys):
    rc = run(["classify", _config_path("two_state.json"), "--json"])
    assert rc == 0
    out = json.loads(capsys.readouterr().out)
    assert out["regime"] == "supercritical"
    assert out["nu"] == pytest.approx(0.780776406404, abs=1e-9)
    assert out["det_root"] == pytest.approx(out["nu"], abs=1e-8)


def test_classify_critical_lattice(capsys):
    rc = run(["classify", _config_path("z_two_catalysts.json")])
    assert rc == 0
    assert "critical" in capsys.readouterr().out


def test_validation_error_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({
        "chain": {"states": [0, 1], "generator": [[-1.0, 2.0], [1.0, -1.0]]},
        "catalysts": [{"site": 0, "alpha": 0.5, "beta": 1.0, "moments": [1.0]}],
    }))
    rc = run(["classify", str(bad)])
    assert rc == 1
    diag = json.loads(capsys.readouterr().err.strip())
    assert diag["code"] == "RowSumNonzero"


def test_missing_file_exit_code(tmp_path, capsys):
    rc = run(["classify", str(tmp_path / "nope.json")])
    assert rc == 1
    assert json.loads(capsys.readouterr().err.strip())["code"] == "FileNotFound"


def test_moments_csv(tmp_path, capsys):
    out = tmp_path / "m.csv"
    rc = run(["moments", _config_path("two_state.json"), "--x", "w",
              "--orders", "1,2", "--out", str(out)])
    assert rc == 0
    rows = list(csv.DictReader(out.open()))
    assert {r["kind"] for r in rows} == {"local", "total"}
    local1 = next(r for r in rows if r["kind"] == "local" and r["order"] == "1")
    assert float(local1["value"]) == pytest.approx(0.8638034, abs=5e-7)


def test_moments_csv_byte_identical(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for out in (a, b):
        assert run(["moments", _config_path("two_state.json"), "--x", "w",
                    "--orders", "1", "--out", str(out)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_critset_outputs(tmp_path, capsys):
    pts = tmp_path / "p.csv"
    skp = tmp_path / "s.csv"
    rc = run(["critset", _config_path("z_two_catalysts.json"), "--grid", "11",
              "--points", str(pts), "--skips", str(skp)])
    assert rc == 0
    rows = list(csv.DictReader(pts.open()))
    assert len(rows) == 11
    out = capsys.readouterr().out
    assert "2.03703703704" in out and "1.05769230769" in out


def test_simulate_csv(tmp_path, capsys):
    out = tmp_path / "e.csv"
    rc = run(["simulate", _config_path("two_state.json"), "--replicates", "200",
              "--times", "1", "--horizon", "1", "--seed", "1",
              "--out", str(out)])
    assert rc == 0
    rows = list(csv.DictReader(out.open()))
    assert {r["site"] for r in rows} == {"w", "u", "TOTAL"}
    assert all(r["truncated"] == "0" for r in rows)


def test_oracle_lattice_rejected(tmp_path, capsys):
    rc = run(["oracle", _config_path("z_two_catalysts.json"), "--times", "1",
              "--out", str(tmp_path / "o.csv")])
    assert rc == 1


def test_oracle_csv(tmp_path):
    out = tmp_path / "o.csv"
    rc = run(["oracle", _config_path("two_state.json"), "--times", "0.5,2",
              "--second", "--out", str(out)])
    assert rc == 0
    rows = list(csv.DictReader(out.open()))
    assert {r["order"] for r in rows} == {"1", "2"}
    assert {r["time"] for r in rows} == {"0.5", "2"}


def test_verify_subcommand(capsys):
    rc = run(["verify", "--models", "3", "--seed", "5"])
    assert rc == 0
    out = capsys.readouterr().out
    assert out.count("PASS") >= 6
