import csv
import io
import json
import math
import subprocess
import sys

import pytest

from hydrocert import cli
from hydrocert.cli import COLUMNS, main, parse_grid
from hydrocert.errors import InputError


def read_csv(path):
    return list(csv.DictReader(io.StringIO(path.read_text())))


def test_grid_syntax():
    assert parse_grid("0.1:0.5:0.1") == [0.1, 0.2, 0.3, 0.4, 0.5]
    g = parse_grid("50:800:log:5")
    assert len(g) == 5 and g[0] == pytest.approx(50) and g[-1] == pytest.approx(800)
    assert g[2] == pytest.approx(200)
    assert parse_grid("1,2.5,4") == [1.0, 2.5, 4.0]
    assert parse_grid("7") == [7.0]
    for bad in ("1:0:0.1", "1:2:0", "0:5:log:3", "a:b:c", "1:2", "1:2:log:x"):
        with pytest.raises(InputError):
            parse_grid(bad)


def test_stability_single_point_infeasible(tmp_path):
    code = main(["stability", "--flow", "rotating-couette", "--ro", "0.5", "--L", "3.14159",
                 "--re", "1000", "--out", str(tmp_path)])
    assert code == 1
    doc = json.loads((tmp_path / "stability.json").read_text())
    assert doc["schema"] == 1 and doc["tool"] == "hydrocert"
    assert doc["results"][0]["status"] == "infeasible"
    rows = read_csv(tmp_path / "stability.csv")
    assert rows[0]["k_m"] == "" and rows[0]["status"] == "infeasible"


def test_stability_single_point_feasible(tmp_path):
    assert main(["stability", "--flow", "couette", "--re", "1e6", "--out", str(tmp_path)]) == 0
    rows = read_csv(tmp_path / "stability.csv")
    assert rows[0]["status"] == "feasible" and float(rows[0]["k_m"]) > 0


def test_csv_header_is_stable(tmp_path):
    main(["stability", "--flow", "rotating-couette", "--ro", "0.5", "--re-grid", "0.5,1,2", "--out", str(tmp_path)])
    text = (tmp_path / "stability.csv").read_text()
    assert text.splitlines()[0] == ",".join(COLUMNS)
    assert [r["status"] for r in read_csv(tmp_path / "stability.csv")] == ["feasible", "feasible", "infeasible"]


def test_recrit_sweep_matches_oracle_and_plots(tmp_path):
    code = main(["recrit", "--flow", "rotating-couette", "--L", str(math.pi), "--ro-grid", "0.1:0.9:0.2",
                 "--out", str(tmp_path), "--plot", "--logy"])
    assert code == 0
    doc = json.loads((tmp_path / "recrit.json").read_text())
    assert doc["summary"]["max_rel_err_vs_oracle"] <= 1e-3
    rows = read_csv(tmp_path / "recrit.csv")
    vals = [float(r["objective"]) for r in rows]
    assert vals == pytest.approx(vals[::-1], rel=1e-3)
    svg = (tmp_path / "recrit.svg").read_text()
    assert svg.lstrip().startswith("<?xml") and "<svg" in svg


def test_recrit_inf_sentinel(tmp_path):
    assert main(["recrit", "--flow", "couette", "--out", str(tmp_path)]) == 0
    rows = read_csv(tmp_path / "recrit.csv")
    assert rows[0]["objective"] == "inf"
    doc = json.loads((tmp_path / "recrit.json").read_text())
    assert doc["results"][0]["objective"] == "inf"


def test_gains_summary(tmp_path):
    assert main(["gains", "--flow", "couette", "--re-grid", "50:200:log:3", "--out", str(tmp_path),
                 "--plot", "--logx", "--logy"]) == 0
    summary = json.loads((tmp_path / "gains.json").read_text())["summary"]
    assert set(summary["loglog_slopes"]) == {"eta1_sq", "eta2_sq", "eta3_sq"}
    assert all(abs(a["rel_err"]) <= 1e-2 for a in summary["oracle_agreement"])
    assert (tmp_path / "gains.svg").exists()


def test_sos_certify_writes_audited_certificate(tmp_path):
    assert main(["sos-certify", "--flow", "poiseuille-like", "--re", "10", "--out", str(tmp_path)]) == 0
    doc = json.loads((tmp_path / "sos-certify.json").read_text())
    cert = doc["certificates"][0]
    assert cert["audit"]["passed"] is True
    assert cert["certificate"]["terms"]


def test_iss_single_point(tmp_path):
    assert main(["iss", "--flow", "couette", "--L", str(2 * math.pi), "--re", "300", "--out", str(tmp_path)]) == 0
    rows = read_csv(tmp_path / "iss.csv")
    assert rows[0]["status"] == "feasible" and rows[0]["notes"].startswith("sigma=")


def test_round_trip_reproduces_csv(tmp_path):
    first, second = tmp_path / "a", tmp_path / "b"
    main(["recrit", "--flow", "rotating-couette", "--ro-grid", "0.2,0.6", "--out", str(first)])
    main(["recrit", "--config", str(first / "recrit.json"), "--out", str(second)])
    assert (first / "recrit.csv").read_bytes() == (second / "recrit.csv").read_bytes()


def test_flags_override_config(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"flow": "rotating-couette", "ro": 0.5, "re": 1000}))
    assert main(["stability", "--config", str(cfg), "--re", "0.5", "--out", str(tmp_path)]) == 0
    assert main(["stability", "--config", str(cfg), "--out", str(tmp_path)]) == 1


@pytest.mark.parametrize("argv", [
    ["stability", "--flow", "pipe", "--re", "1"],
    ["stability", "--flow", "couette"],
    ["stability", "--flow", "couette", "--re", "-3"],
    ["stability", "--flow", "couette", "--re", "abc"],
    ["recrit", "--ro-grid", "1:0:1"],
    ["bogus"],
    ["stability", "--flow", "couette", "--re", "1", "--profile", "x1^2"],
])
def test_invalid_input_exit_code(argv, tmp_path):
    assert main(argv + ["--out", str(tmp_path)] if argv != ["bogus"] else argv) == 3


def test_unknown_config_key(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"flow": "couette", "re": 1, "colour": "red"}))
    assert main(["stability", "--config", str(cfg)]) == 3


def test_workers_env_var(monkeypatch):
    monkeypatch.setenv("HYDROCERT_WORKERS", "3")
    assert cli._workers(None, 10) == 3
    assert cli._workers(8, 2) == 2
    monkeypatch.setenv("HYDROCERT_WORKERS", "x")
    with pytest.raises(InputError):
        cli._workers(None, 4)
    monkeypatch.delenv("HYDROCERT_WORKERS")
    assert cli._workers(None, 1) == 1


def test_parallel_rows_are_ordered(tmp_path, monkeypatch):
    monkeypatch.setenv("HYDROCERT_WORKERS", "2")
    assert main(["stability", "--flow", "rotating-couette", "--ro", "0.5", "--re-grid", "2,0.5,1",
                 "--out", str(tmp_path)]) == 0
    rows = read_csv(tmp_path / "stability.csv")
    assert [float(r["param"]) for r in rows] == [0.5, 1.0, 2.0]


def test_console_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "hydrocert", "stability", "--flow", "couette", "--re", "10",
                           "--out", str(tmp_path)], capture_output=True, text=True)
    assert proc.returncode == 0
    assert (tmp_path / "stability.json").exists()
