import json
import subprocess
import sys

import pytest

from walklab.cli import main
from walklab.experiments import read_jsonl
from walklab.graph import read_edgelist


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def resolved(out):
    return json.loads(out.splitlines()[0])


@pytest.fixture
def g1000(tmp_path, capsys):
    path = tmp_path / "g.edges"
    code, _, _ = run(capsys, "gen", "--gnp", "n=1000,c=2,seed=1", "--out", path)
    assert code == 0
    return path


def test_gen_header(g1000):
    n, m = g1000.read_text().splitlines()[0].split()
    assert n == "1000" and int(m) == read_edgelist(g1000).m


def test_audit_json_keys(tmp_path, capsys, g1000):
    report = tmp_path / "report.json"
    code, out, _ = run(capsys, "audit", "--in", g1000, "--eps", 0.3, "--c", 2, "--json", report)
    assert code == 0
    d = json.loads(report.read_text())
    assert all(k in d for k in "abcdefghi")
    assert "seed" in resolved(out)


def test_returns_dense_limit_exit_3(tmp_path, capsys):
    path = tmp_path / "big.edges"
    assert run(capsys, "gen", "--gnp", "n=5000,c=2,seed=1", "--out", path)[0] == 0
    code, _, err = run(capsys, "returns", "--in", path, "--policy", "min_degree", "--v", 17, "--T", 64, "--exact")
    assert code == 3 and err.strip()


def test_unknown_flag_rejected(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["cover", "--n", "100", "--c", "3", "--bogus", "1"])
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        main(["gen", "--rep", "3"])  # no prefix abbreviations
    assert exc.value.code == 2


def test_resolved_config_printed_with_defaults(capsys):
    code, out, _ = run(capsys, "cover", "--n", 64, "--c", 3, "--replicas", 2, "--seed", 5)
    assert code == 0
    s = resolved(out)
    assert s["command"] == "cover" and s["seed"] == 5
    assert s["cap_mult"] == 200.0 and s["policy"] == ["min_degree"] and s["threads"] >= 1


def test_seed_generated_and_replayable(tmp_path, capsys):
    a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    code, out, _ = run(capsys, "cover", "--n", 64, "--c", 3, "--replicas", 2, "--json", a)
    assert code == 0
    seed = resolved(out)["seed"]
    assert isinstance(seed, int)
    run(capsys, "cover", "--n", 64, "--c", 3, "--replicas", 2, "--seed", seed, "--json", b)
    assert read_jsonl(a)[0]["units"] == read_jsonl(b)[0]["units"]


def test_config_file_merged_under_flags(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"n": "64", "c": 3, "replicas": 4, "seed": 1}))
    code, out, _ = run(capsys, "cover", "--config", cfg, "--replicas", 2)
    assert code == 0
    s = resolved(out)
    assert s["replicas"] == 2 and s["seed"] == 1 and s["n"] == [64]


def test_config_unknown_key_exit_2(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"n": "64", "c": 3, "colour": "red"}))
    assert run(capsys, "cover", "--config", cfg)[0] == 2


def test_reruns_byte_identical(tmp_path, capsys):
    outs = []
    for tag in "ab":
        j, c = tmp_path / f"{tag}.jsonl", tmp_path / f"{tag}.csv"
        code, _, _ = run(capsys, "cover", "--n", "64,128", "--c", 3, "--replicas", 3, "--seed", 9,
                         "--threads", 2 if tag == "a" else 1, "--json", j, "--csv", c)
        assert code == 0
        outs.append((j.read_bytes(), c.read_bytes()))
    assert outs[0] == outs[1]


@pytest.mark.parametrize("argv", [
    ["cover", "--n", "64", "--c", "3", "--replicas", "0"],
    ["gen", "--gnp", "n=2,c=10,seed=1"],
    ["gen", "--gnp", "n=10"],
    ["gen", "--kind", "cycle", "--n", "2"],
    ["audit", "--in", "/nonexistent/graph.edges", "--c", "2"],
    ["cover", "--gnp", "n=10,c=2", "--kind", "cycle"],
    ["stationary", "--kind", "cycle", "--n", "5", "--policy", "uniform", "--policy", "inv_sqrt"],
])
def test_invalid_input_exit_2(capsys, argv):
    assert run(capsys, *argv)[0] == 2


def test_lowerbound_empty_s0_exit_3(capsys):
    code, _, err = run(capsys, "lowerbound", "--n", 2000, "--c", 3, "--replicas", 2, "--seed", 1)
    assert code == 3 and "audit failures" in err


def test_other_subcommands_run(tmp_path, capsys):
    g = tmp_path / "g.edges"
    assert run(capsys, "gen", "--gnp", "n=300,c=3,seed=2", "--out", g)[0] == 0
    j = tmp_path / "s.json"
    assert run(capsys, "stationary", "--in", g, "--json", j)[0] == 0
    assert json.loads(j.read_text())["detailed_balance_violation"] <= 1e-12
    assert run(capsys, "mix", "--in", g, "--json", j)[0] == 0
    assert json.loads(j.read_text())["mixing_time"] >= 1
    assert run(capsys, "returns", "--in", g, "--v", "0,5", "--T", 20, "--exact", "--json", j)[0] == 0
    assert len(json.loads(j.read_text())["profiles"]) == 2
    code, out, _ = run(capsys, "compare", "--kind", "cycle", "--n", 20, "--replicas", 5, "--seed", 1)
    assert code == 0 and "inv_sqrt" not in out
    code, out, _ = run(capsys, "firstvisit", "--in", g, "--replicas", 200, "--seed", 1, "--t-grid", "300,600")
    assert code == 0 and "max|empirical - predicted|" in out
    code, out, _ = run(capsys, "contract", "--kind", "cycle", "--n", 12, "--u", 0, "--v", 6)
    assert code == 0 and "gap=" in out
    code, out, _ = run(capsys, "lowerbound", "--n", 2000, "--c", 3, "--replicas", 2, "--seed", 1, "--p2-radius", 1)
    assert code == 0 and "|S|=" in out


def test_console_entry_point(tmp_path):
    path = tmp_path / "k.edges"
    proc = subprocess.run([sys.executable, "-m", "walklab", "gen", "--kind", "complete", "--n", "5", "--out", str(path)],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert path.read_text().splitlines()[0] == "5 10"
    assert "elapsed" in proc.stderr
