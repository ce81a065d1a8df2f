import argparse
import csv
import subprocess
import sys

import pytest

from manetsim.cli import main, parse_seeds

from conftest import SCENARIOS


def rows(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def test_parse_seeds():
    assert parse_seeds("3") == [3]
    assert parse_seeds("1..4") == [1, 2, 3, 4]
    assert parse_seeds("1,5..6") == [1, 5, 6]
    with pytest.raises(argparse.ArgumentTypeError):
        parse_seeds("5..1")


def test_run_writes_one_row(tmp_path):
    out = tmp_path / "r.csv"
    rc = main(["run", "--scenario", str(SCENARIOS / "star4.txt"), "--protocol", "pc-aodv",
               "--seed", "7", "--out", str(out)])
    assert rc == 0
    (row,) = rows(out)
    assert (row["protocol"], row["seed"], row["hello_sent"], row["ack_sent"]) == (
        "pc-aodv", "7", "105", "135")


def test_sim_time_flag_overrides_file(tmp_path):
    out = tmp_path / "r.csv"
    assert main(["run", "--scenario", str(SCENARIOS / "star4.txt"), "--sim-time", "30",
                 "--out", str(out)]) == 0
    assert rows(out)[0]["hello_sent"] == "120"


def test_compare_rows(tmp_path):
    out = tmp_path / "c.csv"
    assert main(["compare", "--scenario", str(SCENARIOS / "star4.txt"), "--seeds", "1..2",
                 "--out", str(out)]) == 0
    got = rows(out)
    assert len(got) == 5
    assert got[-1]["run_id"] == "mean_delta"
    assert float(got[-1]["hello_sent"]) == -135.0


def test_sweep_rows(tmp_path):
    out = tmp_path / "s.csv"
    assert main(["sweep", "--scenario", str(SCENARIOS / "overhead_sweep.txt"), "--nodes", "5,8",
                 "--seeds", "1", "--sim-time", "5", "--out", str(out)]) == 0
    assert [r["nodes"] for r in rows(out)] == ["5", "5", "8", "8"]


def test_errors_give_nonzero_exit(tmp_path, capsys):
    bad = tmp_path / "bad.txt"
    bad.write_text("nodes = 2\nwat = 1\n")
    assert main(["run", "--scenario", str(bad), "--out", str(tmp_path / "x.csv")]) == 1
    assert "line 2" in capsys.readouterr().err
    assert main(["run", "--scenario", str(tmp_path / "missing.txt"),
                 "--out", str(tmp_path / "x.csv")]) == 1


def test_module_entry_point(tmp_path):
    out = tmp_path / "m.csv"
    proc = subprocess.run([sys.executable, "-m", "manetsim", "run", "--scenario",
                           str(SCENARIOS / "star4.txt"), "--out", str(out)],
                          capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert rows(out)[0]["hello_sent"] == "240"
