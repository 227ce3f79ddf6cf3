import json
import subprocess
import sys
from importlib import resources

import numpy as np
import pytest

from alaamsim import io
from alaamsim.cli import main

DATA = resources.files("alaamsim") / "data"
GOLDEN_THETA_TOL_SE = 0.25


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def test_stats_on_k3(capsys):
    code, out, _ = run(capsys, "stats", "--network", DATA / "k3.txt")
    assert code == 0
    header, row = out.strip().splitlines()
    rec = dict(zip(header.split(","), row.split(",")))
    assert float(rec["density"]) == 1.0 and rec["n"] == "3" and float(rec["clustering"]) == 1.0


def test_estimate_on_fixture_matches_golden(capsys, tmp_path):
    out = tmp_path / "est.csv"
    code, _, _ = run(capsys, "estimate", "--network", DATA / "fixture12_edges.txt",
                     "--attrs", DATA / "fixture12_attrs.csv", "--seed", 0, "--strict", "-o", out)
    assert code == 0
    got = io.read_estimate(out)
    golden = np.loadtxt(DATA / "fixture12_mle.csv", delimiter=",", skiprows=1, usecols=(1, 2))
    names = ["density", "activity", "contagion", "binary", "continuous"]
    for k, name in enumerate(names):
        assert abs(got[name]["estimate"] - golden[k, 0]) < GOLDEN_THETA_TOL_SE * golden[k, 1]


def test_strict_non_convergence_exit_code(capsys):
    code, out, err = run(capsys, "estimate", "--network", DATA / "fixture12_edges.txt",
                         "--attrs", DATA / "fixture12_attrs.csv", "--strict", "--max-runs", 1,
                         "--phase2-subphases", 1, "--mcmc-spacing", 1, "--burn-in", 0)
    assert code == 3 and "did not converge" in err and out.startswith("effect,")


def test_usage_errors_exit_1(capsys):
    assert run(capsys, "frobnicate")[0] == 1
    assert run(capsys, "stats", "--network", DATA / "k3.txt", "--bogus")[0] == 1
    assert run(capsys, "sample", "--network", DATA / "k3.txt", "--scheme", "random", "-o", "x")[0] == 1
    assert run(capsys)[0] == 1


def test_data_errors_exit_2_and_name_the_line(capsys, tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("node,binary,continuous,outcome\n0,0,0.1,0\n1,1,0.2,7\n2,0,0.3,1\n")
    code, _, err = run(capsys, "estimate", "--network", DATA / "k3.txt", "--attrs", bad)
    assert code == 2 and "bad.csv:3" in err and "outcome" in err
    code, _, err = run(capsys, "stats", "--network", tmp_path / "missing.txt")
    assert code == 2


def test_one_based_flag(capsys, tmp_path):
    p = tmp_path / "g.txt"
    p.write_text("1 2\n2 3\n3 1\n")
    code, out, _ = run(capsys, "stats", "--network", p, "--one-based")
    assert code == 0 and out.splitlines()[1].startswith("3,1,2,2,1,1")


def test_pipeline(capsys, tmp_path):
    net, attrs, ys, ay = (tmp_path / f for f in ("net.txt", "a.csv", "y.csv", "ay.csv"))
    assert run(capsys, "gen-net", "--nodes", 120, "--edge", -3.5, "--alt-k-star", 0, "--alt-k-triangle",
               0.6, "--alt-two-path", 0, "--burn-in", 300_000, "--seed", 1, "-o", net)[0] == 0
    assert run(capsys, "gen-attrs", "--network", net, "--seed", 2, "-o", attrs)[0] == 0
    params = tmp_path / "theta.csv"
    params.write_text("effect,value\ndensity,-1.8\nactivity,0.1\ncontagion,0.4\nbinary,0.9\ncontinuous,0.7\n")
    assert run(capsys, "sim-alaam", "--network", net, "--attrs", attrs, "--params", params,
               "--burn-in", 20_000, "--spacing", 2_000, "--samples", 2, "--seed", 3,
               "-o", ys, "--attrs-out", ay)[0] == 0
    assert io.read_outcomes(ys, 120).shape == (2, 120)
    smp = tmp_path / "smp"
    assert run(capsys, "sample", "--network", net, "--scheme", "snowball", "--seeds", 4, "--waves", 2,
               "--max-follow", "inf", "--attrs", ay, "--seed", 4, "-o", smp)[0] == 0
    waves = io.read_waves(smp / "waves.csv")
    sample_graph = io.read_edge_list(smp / "sample_edges.txt")
    assert len(waves) == sample_graph.node_count and waves.max() <= 2
    code, out, err = run(capsys, "estimate", "--network", smp / "sample_edges.txt",
                         "--attrs", smp / "sample_attrs.csv", "--conditional", smp / "waves.csv",
                         "--seed", 5)
    assert code == 0 and len(out.strip().splitlines()) == 6


def _small_config(tmp_path, sampling):
    cfg = {
        "network": {"ergm": {"edge": -2.6, "alt_k_triangle": 0.4, "n": 60}, "ergm_burn_in": 100_000},
        "true_theta": {"density": -1.5, "activity": 0.1, "contagion": 0.4, "binary": 0.8,
                       "continuous": 0.6},
        "replicates": 3,
        "sampling": sampling,
        "estimation": {"phase3_samples": 100},
        "outcome_burn_in": 10_000,
        "outcome_spacing": 1_000,
        "bootstrap_replicates": 200,
        "seed": 3,
    }
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps(cfg))
    return p


def test_sweep_outputs_are_byte_stable(capsys, tmp_path):
    cfg = _small_config(tmp_path, {"scheme": "snowball", "waves": [1, 2], "seeds": [3],
                                   "max_follow": [2, "Inf"]})
    a, b = tmp_path / "a", tmp_path / "b"
    assert run(capsys, "sweep", "--config", cfg, "-o", a)[0] == 0
    assert run(capsys, "sweep", "--config", cfg, "-o", b)[0] == 0
    assert (a / "summary.csv").read_bytes() == (b / "summary.csv").read_bytes()
    rows = io.read_summary(a / "summary.csv")
    assert len(rows) == 4 * 5 and {r["m"] for r in rows} == {"2", "Inf"}
    manifest = json.loads((a / "manifest.json").read_text())
    assert manifest["files"]["summary.csv"]["sha256"] == io.sha256_file(a / "summary.csv")
    assert manifest["seed"] == 3 and manifest["ergm_lambda"] == 2.0
    assert not (a / ".cells").exists()


def test_experiment_requires_single_cell(capsys, tmp_path):
    cfg = _small_config(tmp_path, {"scheme": "random", "sizes": [30, 40]})
    assert run(capsys, "experiment", "--config", cfg, "-o", tmp_path / "o")[0] == 1
    cfg = _small_config(tmp_path, {"scheme": "random", "sizes": [40]})
    code, _, _ = run(capsys, "experiment", "--config", cfg, "-o", tmp_path / "o", "--replicates", 2)
    assert code == 0
    rows = io.read_summary(tmp_path / "o" / "summary.csv")
    assert [r["effect"] for r in rows] == ["density", "activity", "contagion", "binary", "continuous"]
    assert all(r["n_total"] == "2" and r["scheme"] == "random" for r in rows)


def test_bad_config_json(capsys, tmp_path):
    p = tmp_path / "cfg.json"
    p.write_text('{"network": {"path": "x.txt"},\n "replicates": }')
    code, _, err = run(capsys, "sweep", "--config", p, "-o", tmp_path / "o")
    assert code == 2 and "cfg.json:2" in err


def test_console_script_entry_point():
    proc = subprocess.run([sys.executable, "-m", "alaamsim.cli", "stats", "--network",
                           str(DATA / "k3.txt")], capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.startswith("n,components")
