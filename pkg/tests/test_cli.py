from __future__ import annotations

import csv
import json
import subprocess
import sys

import pytest

from nearadditive.cli import main


def build(tmp_path, *extra, name="run"):
    out = tmp_path / name
    rc = main(["build", *extra, "--out", str(out)])
    return rc, out


def verify_args(out, kind="emulator", transcript=True):
    args = ["verify", "--graph", str(out / "graph.txt"), f"--{kind}", str(out / f"{kind}.txt"), "--schedule", str(out / "schedule.json")]
    if transcript:
        args += ["--transcript", str(out / "build_transcript.jsonl")]
    return args


def test_centralized_cycle(tmp_path, capsys):
    rc, out = build(tmp_path, "--algo", "centralized", "--gen", "cycle:5", "--eps", "0.5", "--kappa", "2")
    assert rc == 0
    summary = json.loads((out / "summary.json").read_text())
    assert summary["edges"] == 5 and summary["edges"] <= summary["size_bound"]
    for f in ("emulator.txt", "schedule.txt", "schedule.json", "build_transcript.jsonl", "sim_transcript.jsonl"):
        assert (out / f).exists()
    assert "deg" in (out / "schedule.txt").read_text()


def test_verify_roundtrip(tmp_path, capsys):
    rc, out = build(tmp_path, "--algo", "distributed", "--gen", "grid:8", "--kappa", "4", "--rho", "0.45")
    assert rc == 0
    capsys.readouterr()
    assert main(verify_args(out)) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["pass"] and set(rep["lemma_checklist"].values()) == {"pass"}


def test_decremented_weight_is_caught(tmp_path, capsys):
    rc, out = build(tmp_path, "--algo", "centralized", "--gen", "er:60:0.08", "--kappa", "3", "--seed", "2")
    lines = (out / "emulator.txt").read_text().splitlines()
    idx = next(i for i, ln in enumerate(lines[1:], 1) if int(ln.split()[2]) > 1)
    u, v, w = map(int, lines[idx].split())
    lines[idx] = f"{u} {v} {w - 1}"
    (out / "emulator.txt").write_text("\n".join(lines) + "\n")
    capsys.readouterr()
    assert main(verify_args(out, transcript=False)) == 1
    rep = json.loads(capsys.readouterr().out)
    wit = rep["stretch"]["violations"][0]
    assert wit["kind"] == "shorter" and "path_G" in wit


def test_spanner_without_rho(tmp_path):
    rc, _ = build(tmp_path, "--algo", "spanner", "--gen", "cycle:5", "--kappa", "3")
    assert rc == 2


def test_spanner_infeasible_and_override(tmp_path, capsys):
    rc, _ = build(tmp_path, "--algo", "spanner", "--gen", "cycle:30", "--kappa", "3", "--rho", "0.45")
    assert rc == 3
    assert "90" in capsys.readouterr().err
    rc, out = build(tmp_path, "--algo", "spanner", "--gen", "cycle:30", "--kappa", "3", "--rho", "0.45", "--no-feasibility-check")
    assert rc == 0
    assert main(verify_args(out, "spanner")) == 0


@pytest.mark.parametrize(
    "argv",
    [
        ["--algo", "distributed", "--gen", "cycle:5", "--kappa", "2", "--rho", "0.45"],
        ["--algo", "centralized", "--gen", "grid:0", "--kappa", "2"],
        ["--algo", "centralized", "--kappa", "2"],
        ["--algo", "centralized", "--gen", "cycle:5", "--eps", "1.5", "--kappa", "2"],
    ],
)
def test_config_errors(tmp_path, argv):
    assert build(tmp_path, *argv)[0] == 2


def test_bad_graph_file(tmp_path, capsys):
    p = tmp_path / "g.txt"
    p.write_text("3 1\n0 0\n")
    assert build(tmp_path, "--graph", str(p))[0] == 2
    assert "line 2" in capsys.readouterr().err


def test_seq_mode_deterministic(tmp_path):
    args = ["--algo", "distributed", "--gen", "er:80:0.08", "--kappa", "4", "--rho", "0.3", "--mode", "seq", "--seed", "5"]
    _, a = build(tmp_path, *args, name="a")
    _, b = build(tmp_path, *args, name="b")
    for f in ("emulator.txt", "build_transcript.jsonl", "sim_transcript.jsonl", "schedule.json"):
        assert (a / f).read_bytes() == (b / f).read_bytes()
    _, c = build(tmp_path, *args[:-4], "--mode", "sim", "--seed", "5", name="c")
    for f in ("emulator.txt", "build_transcript.jsonl", "sim_transcript.jsonl"):
        assert (a / f).read_bytes() == (c / f).read_bytes()


def test_config_file_and_flag_precedence(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"algo": "centralized", "gen": "cycle:7", "kappa": 3}))
    rc, out = build(tmp_path, "--config", str(cfg), "--kappa", "2")
    assert rc == 0
    summary = json.loads((out / "summary.json").read_text())
    assert summary["kappa"] == 2 and summary["n"] == 7
    cfg.write_text(json.dumps({"colour": 1}))
    assert build(tmp_path, "--config", str(cfg))[0] == 2


def test_dimacs_input(tmp_path):
    p = tmp_path / "g.gr"
    p.write_text("p sp 4 6\na 1 2 1\na 2 3 1\na 3 4 1\na 2 1 1\na 3 2 1\na 4 3 1\n")
    rc, out = build(tmp_path, "--graph", str(p), "--format", "dimacs", "--kappa", "2")
    assert rc == 0 and json.loads((out / "summary.json").read_text())["m"] == 3


def test_bench(tmp_path, capsys):
    suite = {
        "defaults": {"eps": 0.5},
        "runs": [
            {"algo": "centralized", "gen": "cycle:16", "kappa": 2},
            {"algo": "distributed", "gen": "grid:4", "kappa": 4, "rho": 0.45},
            {"algo": "spanner", "gen": "cycle:16", "kappa": 3, "rho": 0.45, "no_feasibility_check": True},
        ],
    }
    p = tmp_path / "suite.json"
    p.write_text(json.dumps(suite))
    out = tmp_path / "bench.csv"
    assert main(["bench", "--suite", str(p), "--out", str(out)]) == 0
    rows = list(csv.DictReader(out.open()))
    assert len(rows) == 3
    assert all(float(r["size_constant"]) <= 1.0 for r in rows if r["algo"] != "spanner")
    assert rows[1]["round_ratio"] and not rows[0]["round_ratio"]


def test_module_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "nearadditive", "--help"], capture_output=True, text=True)
    assert r.returncode == 0 and "build" in r.stdout
