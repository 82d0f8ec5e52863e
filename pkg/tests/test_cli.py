import json

import pytest

from pllsurrogate.cli import main


@pytest.fixture
def workdir(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    return tmp_path


def test_sample_fit_simulate_flow(workdir, capsys):
    assert main(["sample", "-n", "100", "--seed", "7"]) == 0
    lines = (workdir / "samples.csv").read_text().splitlines()
    assert lines[0] == "wp_m,wn_m,vc_v,freq_hz,power_w" and len(lines) == 101

    assert main(["fit", "--samples", "samples.csv", "--degree", "2", "--vams", "vco.vams"]) == 0
    out = capsys.readouterr().out
    r2 = float(out.split("R2_f=")[1].split()[0])
    assert r2 >= 0.99
    assert (workdir / "metamodel.csv").read_text().count("\n") == 10
    assert "`timescale 10ps / 1ps" in (workdir / "vco.vams").read_text()

    assert main(["simulate", "--view", "metamodel", "--model", "metamodel.csv"]) == 0
    assert "lock_time=" in capsys.readouterr().out
    assert (workdir / "trace_metamodel.csv").read_text().startswith("t_s,vc_v,freq_hz,power_w\n")
    assert (workdir / "edges_metamodel.csv").read_text().startswith("t_s,signal,value\n")

    man = json.loads((workdir / "simulate_manifest.json").read_text())
    assert set(man) == {"command", "config_digest", "seed", "tool_version", "wall_clock_s", "artifacts"}
    assert man["command"] == "simulate"


def test_sample_single_row_and_empty(workdir):
    assert main(["sample", "-n", "1", "--out", "one.csv"]) == 0
    assert len((workdir / "one.csv").read_text().splitlines()) == 2
    assert main(["sample", "-n", "0"]) == 2


def test_sample_bad_ranges(workdir):
    assert main(["sample", "-n", "5", "--ranges", "1", "0", "--ranges", "0", "1", "--ranges", "0", "1"]) == 2


def test_fit_underdetermined_exit_code(workdir):
    assert main(["sample", "-n", "9", "--out", "s9.csv"]) == 0
    assert main(["fit", "--samples", "s9.csv"]) == 3


def test_missing_file_exit_code(workdir):
    assert main(["fit", "--samples", "nope.csv"]) == 2
    assert main(["simulate", "--config", "nope.json"]) == 2


def test_usage_error_exit_code(workdir):
    with pytest.raises(SystemExit) as exc:
        main(["simulate", "--view", "spice"])
    assert exc.value.code == 2


def test_simulation_failure_exit_code(workdir):
    bad = workdir / "bad.csv"
    bad.write_text("0,0,0,1.0e9,1.0e-4\n0,0,1,-1.0e10,0.0\n")
    assert main(["simulate", "--view", "metamodel", "--model", str(bad)]) == 4


def test_cost_prints_hours(workdir, capsys):
    assert main(["cost", "--ni", "1200", "--ns", "200", "--text", "60", "--tsim", "0"]) == 0
    assert "16.7 h" in capsys.readouterr().out


def test_compare_table(workdir, capsys):
    cfg = workdir / "pll.json"
    cfg.write_text(json.dumps({"t_end": 150e-9}))
    assert main(["compare", "--config", str(cfg), "--views", "oracle,linear,metamodel"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0].split()[0] == "view"
    assert [ln.split()[0] for ln in out[1:4]] == ["oracle", "linear", "metamodel"]
    rows = (workdir / "compare.csv").read_text().splitlines()
    assert len(rows) == 4


def test_optimize_is_reproducible(workdir):
    cfg = workdir / "pll.json"
    cfg.write_text(json.dumps({"t_end": 450e-9}))
    de = workdir / "de.json"
    de.write_text(json.dumps({"K": 8, "max_generations": 4}))
    args = ["optimize", "--config", str(cfg), "--de", str(de), "--seed", "3"]
    assert main(args + ["--history-out", "h1.csv"]) == 0
    assert main(args + ["--history-out", "h2.csv"]) == 0
    h1 = (workdir / "h1.csv").read_text()
    assert h1 == (workdir / "h2.csv").read_text()
    assert h1.splitlines()[0] == "generation,best_power_w,best_wp_m,best_wn_m,feasible"
