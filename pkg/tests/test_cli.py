import csv
import json
import subprocess
import sys
from pathlib import Path

import pytest

from econcast.cli import main

CONFIGS = Path(__file__).resolve().parents[1] / "configs"
SMALL = {"homogeneous": {"n": 3, "rho": "10uW", "listen_cost": "500uW", "transmit_cost": "500uW"}}


@pytest.fixture
def small_cfg(tmp_path):
    p = tmp_path / "net.json"
    p.write_text(json.dumps(SMALL))
    return p


def run(argv, capsys):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def load(path):
    return json.loads(Path(path).read_text())


def test_oracle_table(tmp_path, capsys):
    out = tmp_path / "o.json"
    code, stdout, _ = run(["oracle", "--config", CONFIGS / "table2.json", "--output", out], capsys)
    assert code == 0
    assert stdout.strip().endswith(f"-> {out}")
    doc = load(out)
    assert doc["schema"] == "econcast.oracle/1"
    assert doc["result"]["awake_fraction"] == pytest.approx([0.005, 0.01, 0.05, 0.1], abs=1e-12)


def test_oracle_grid_bounds(tmp_path, capsys):
    out = tmp_path / "o.json"
    code, _, _ = run(["oracle", "--config", CONFIGS / "grid3x3.json", "--output", out], capsys)
    assert code == 0
    res = load(out)["result"]
    assert res["lower"]["throughput"] == pytest.approx(res["upper"]["throughput"], rel=1e-8)
    code, _, err = run(["oracle", "--config", CONFIGS / "grid3x3.json", "--mode", "anyput", "--output", out], capsys)
    assert code == 5
    assert json.loads(err)["error"]["kind"] == "compute"


def test_oracle_csv_by_extension(small_cfg, tmp_path, capsys):
    out = tmp_path / "o.csv"
    assert run(["oracle", "--config", small_cfg, "--output", out], capsys)[0] == 0
    rows = list(csv.DictReader(out.open()))
    assert [r["node"] for r in rows] == ["0", "1", "2"]


def test_gibbs(small_cfg, tmp_path, capsys):
    out = tmp_path / "g.json"
    code, stdout, _ = run(["gibbs", "--config", small_cfg, "--sigma", "0.5", "--output", out], capsys)
    assert code == 0 and "converged=True" in stdout
    doc = load(out)
    assert doc["result"]["converged"] is True
    assert len(doc["result"]["trace"]) == doc["result"]["iterations"]
    run(["gibbs", "--config", small_cfg, "--sigma", "0.5", "--no-trace", "--output", out], capsys)
    assert "trace" not in load(out)["result"]


def test_gibbs_needs_sigma(small_cfg, capsys):
    code, _, err = run(["gibbs", "--config", small_cfg], capsys)
    assert code == 2
    assert "--sigma" in json.loads(err)["error"]["message"]


def test_gibbs_takes_sigma_from_config(tmp_path, capsys):
    out = tmp_path / "g.json"
    code, _, _ = run(["gibbs", "--config", CONFIGS / "sim_n5.json", "--output", out, "--no-trace"], capsys)
    assert code == 0
    assert load(out)["config"]["sigma"] == 0.5


def test_simulate_is_byte_identical(tmp_path):
    outs = []
    for k in range(2):
        out = tmp_path / f"s{k}.json"
        subprocess.run([sys.executable, "-m", "econcast", "simulate", "--config", str(CONFIGS / "sim_n5.json"),
                        "--duration", "100", "--output", str(out)], check=True, capture_output=True)
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]


def test_simulate_overrides_and_trace(small_cfg, tmp_path, capsys):
    out, trace = tmp_path / "s.json", tmp_path / "t.csv"
    code, stdout, _ = run(["simulate", "--config", small_cfg, "--sigma", "0.25", "--duration", "20", "--seed", "9",
                           "--variant", "noncapture", "--trace-csv", trace, "--no-samples", "--output", out], capsys)
    assert code == 0 and "seed=9" in stdout
    doc = load(out)
    assert doc["config"]["sigma"] == 0.25 and doc["config"]["variant"] == "noncapture"
    assert "burst_lengths" not in doc["result"]
    assert trace.read_text().startswith("time,node,old_state,new_state\n")


def test_env_output_dir(small_cfg, tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("ECONCAST_OUTPUT_DIR", str(tmp_path / "results"))
    code, stdout, _ = run(["oracle", "--config", small_cfg], capsys)
    assert code == 0
    assert (tmp_path / "results" / "oracle.json").exists()


def test_input_file_untouched(small_cfg, tmp_path, capsys):
    before = small_cfg.read_bytes()
    run(["simulate", "--config", small_cfg, "--duration", "5", "--output", tmp_path / "s.json"], capsys)
    assert small_cfg.read_bytes() == before


def test_balance(small_cfg, tmp_path, capsys):
    out = tmp_path / "b.json"
    code, _, _ = run(["balance", "--config", small_cfg, "--sigma", "0.5", "--eta", "1,2,3", "--output", out], capsys)
    assert code == 0
    assert load(out)["result"]["max_violation"] < 1e-12
    code, _, _ = run(["balance", "--config", small_cfg, "--sigma", "0.5", "--eta", "1,2", "--output", out], capsys)
    assert code == 2


def test_burstiness(small_cfg, tmp_path, capsys):
    out = tmp_path / "b.json"
    code, stdout, _ = run(["burstiness", "--config", small_cfg, "--sigma", "0.5", "--mode", "anyput", "--output", out],
                          capsys)
    assert code == 0
    res = load(out)["result"]
    assert res["analytic_mean"] == pytest.approx(7.38905609893065)
    assert res["empirical_mean"] is None
    code, stdout, _ = run(["burstiness", "--config", small_cfg, "--sigma", "0.5", "--simulate", "--duration", "200",
                           "--output", out], capsys)
    assert code == 0 and "empirical=" in stdout
    assert load(out)["result"]["samples"] > 0


def test_schedule(tmp_path, capsys):
    out = tmp_path / "s.json"
    code, stdout, _ = run(["schedule", "--config", CONFIGS / "table2.json", "--output", out], capsys)
    assert code == 0 and "audit=ok" in stdout
    res = load(out)["result"]
    assert res["throughput"] == pytest.approx(res["oracle_throughput"], rel=1e-9)


def test_sweep_csv(tmp_path, capsys):
    out = tmp_path / "sweep.csv"
    base = tmp_path / "base.json"
    base.write_text(json.dumps({"baselines": {"panda": 0.002}}))
    code, _, _ = run(["sweep", "--h", "10,100", "--sigma", "0.5", "--n", "3", "--replicates", "2", "--seed", "1",
                      "--config", base, "--baseline", "birthday=0.001", "--output", out], capsys)
    assert code == 0
    rows = list(csv.DictReader(out.open()))
    assert [(r["h"], r["replicates"]) for r in rows] == [("10.0", "2"), ("100.0", "2")]
    assert float(rows[0]["ratio_over_panda"]) == pytest.approx(float(rows[0]["ratio_mean"]) / 0.002)
    assert "ratio_over_birthday" in rows[0]
    assert rows[0]["ci_degenerate"] == "False"


def test_sweep_parallel_matches_serial(tmp_path, capsys):
    outs = []
    for jobs in (1, 2):
        out = tmp_path / f"sw{jobs}.json"
        run(["sweep", "--h", "100", "--sigma", "0.5", "--n", "3", "--replicates", "3", "--jobs", jobs,
             "--output", out], capsys)
        outs.append(load(out)["result"])
    assert outs[0] == outs[1]


def test_validate(tmp_path, capsys):
    out = tmp_path / "v.json"
    code, stdout, _ = run(["validate", "--config", CONFIGS / "sim_n5.json", "--output", out], capsys)
    assert code == 0 and "simulation, 5 nodes" in stdout
    assert load(out)["duration"] == 2000.0


@pytest.mark.parametrize(
    "argv, code, kind",
    [
        (["frobnicate"], 2, "usage"),
        (["oracle"], 2, "usage"),
        (["oracle", "--config", "/nonexistent/x.json"], 3, "config"),
        (["sweep", "--h", "5"], 2, "usage"),
    ],
)
def test_exit_codes(argv, code, kind, capsys):
    got, _, err = run(argv, capsys)
    assert got == code
    assert json.loads(err)["error"]["kind"] == kind


def test_syntax_and_schema_errors(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"nodes": [}')
    code, _, err = run(["oracle", "--config", bad], capsys)
    assert code == 3
    assert json.loads(err)["error"]["diagnostics"][0]["line"] == 1
    bad.write_text('{\n "homogeneous": {"n": 2, "rho": "10uW",\n  "listen_cost": "-5mW", "transmit_cost": "1mW"}\n}')
    code, _, err = run(["oracle", "--config", bad], capsys)
    assert code == 4
    (d,) = json.loads(err)["error"]["diagnostics"]
    assert d["path"] == "$.homogeneous.listen_cost" and d["line"] == 3


def test_unwritable_output(small_cfg, tmp_path, capsys):
    blocker = tmp_path / "file"
    blocker.write_text("")
    code, _, err = run(["oracle", "--config", small_cfg, "--output", blocker / "x.json"], capsys)
    assert code == 6
    assert json.loads(err)["error"]["kind"] == "output"


def test_unsupported_topology_is_a_compute_failure(tmp_path, capsys):
    code, _, err = run(["gibbs", "--config", CONFIGS / "grid3x3.json", "--sigma", "0.5", "--output",
                        tmp_path / "g.json"], capsys)
    assert code == 5
    assert "clique" in json.loads(err)["error"]["message"]


def test_unconstrained_schedule(tmp_path, capsys):
    cfg = tmp_path / "rich.json"
    cfg.write_text(json.dumps({"homogeneous": {"n": 2, "rho": "1W", "listen_cost": "1mW", "transmit_cost": "1mW"}}))
    code, stdout, _ = run(["schedule", "--config", cfg, "--output", tmp_path / "s.json"], capsys)
    assert code == 0
    assert "period=2 throughput=1 " in stdout


def test_help_lists_exit_codes(capsys):
    code, out, _ = run(["--help"], capsys)
    assert code == 0
    assert "exit codes" in out and "6  the result could not be written" in out


def test_console_script_entry_point(tmp_path):
    out = tmp_path / "o.json"
    res = subprocess.run([sys.executable, "-m", "econcast", "oracle", "--config", str(CONFIGS / "table2.json"),
                          "--output", str(out)], capture_output=True, text=True)
    assert res.returncode == 0
    assert res.stdout.startswith("oracle groupput throughput=")
