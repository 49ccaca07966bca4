from __future__ import annotations

import subprocess
import sys

import pytest

from evcs_sim.cli import main

from conftest import data_path

DEMO = data_path("scenarios", "hijack_demo.toml")


def test_no_command(capsys):
    assert main([]) == 2
    err = capsys.readouterr().err.strip().splitlines()
    assert err == ["error: BadArguments: a command is required: validate, run, sweep or report"]


def test_run_requires_scenario(capsys):
    assert main(["run"]) == 2
    assert capsys.readouterr().err.startswith("error: BadArguments:")


def test_negative_seed(capsys, tmp_path):
    assert main(["run", "--scenario", str(DEMO), "--seed", "-1", "--out", str(tmp_path)]) == 2


def test_validate_shipped_files(capsys):
    paths = [str(p) for p in sorted(data_path().rglob("*.toml"))]
    assert main(["validate", *paths]) == 0
    out = capsys.readouterr().out.splitlines()
    assert len(out) == len(paths) and all(line.startswith("ok ") for line in out)


def test_validate_two_slack_buses(capsys, tmp_path):
    bad = tmp_path / "bad.toml"
    bad.write_text(data_path("cases", "two_bus.toml").read_text().replace('kind = "pq"', 'kind = "slack"'))
    assert main(["validate", str(bad)]) == 3
    err = capsys.readouterr().err.strip().splitlines()
    assert err[-1].startswith("error: ValidationFailed:") and "exactly one slack bus required, found 2" in err[-1]


def test_validate_missing_seed(capsys, tmp_path):
    scen = tmp_path / "s.toml"
    scen.write_text(f'[scenario]\ngrid_case = "{data_path("cases", "glover7.toml")}"\n')
    assert main(["validate", str(scen)]) == 3
    assert "sim.seed is required" in capsys.readouterr().err


def test_run_twice_identical(capsys, tmp_path):
    for d in ("a", "b"):
        assert main(["run", "--scenario", str(DEMO), "--seed", "4", "--out", str(tmp_path / d)]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert [l.split("\t")[1] for l in lines][0] == lines[1].split("\t")[1]
    for f in ("audit.csv", "trace.csv", "events.csv", "impact.csv", "summary.txt"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


def test_sweep_creates_point_dirs(capsys, tmp_path):
    rc = main(["sweep", "--scenario", str(DEMO), "--out", str(tmp_path),
               "--vary", "sim.seed=1,2,3", "--vary", "policy.preset=vulnerable,mitigated"])
    assert rc == 0
    dirs = sorted(p.name for p in tmp_path.iterdir() if p.is_dir())
    assert len(dirs) == 6
    assert "sim.seed=2__policy.preset=mitigated" in dirs
    assert len(capsys.readouterr().out.splitlines()) == 6


def test_sweep_parallel_matches_serial(capsys, tmp_path):
    args = ["--scenario", str(DEMO), "--vary", "sim.seed=5,6"]
    assert main(["sweep", *args, "--out", str(tmp_path / "s")]) == 0
    assert main(["sweep", *args, "--out", str(tmp_path / "p"), "--jobs", "2"]) == 0
    for point in ("sim.seed=5", "sim.seed=6"):
        a = (tmp_path / "s" / point / "events.csv").read_bytes()
        assert a == (tmp_path / "p" / point / "events.csv").read_bytes()


def test_sweep_bad_vary(capsys, tmp_path):
    assert main(["sweep", "--scenario", str(DEMO), "--vary", "sim.seed"]) == 2


def test_report_rebuilds_summary(capsys, tmp_path):
    assert main(["run", "--scenario", str(DEMO), "--out", str(tmp_path)]) == 0
    before = (tmp_path / "summary.txt").read_text()
    (tmp_path / "summary.txt").unlink()
    capsys.readouterr()
    assert main(["report", str(tmp_path)]) == 0
    assert capsys.readouterr().out == before == (tmp_path / "summary.txt").read_text()


def test_report_missing_dir(capsys, tmp_path):
    assert main(["report", str(tmp_path / "nothing")]) == 1
    err = capsys.readouterr().err.strip().splitlines()
    assert len(err) == 1 and err[0].startswith("error: RuntimeFailure:")


def test_console_module_entry(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "evcs_sim.cli", "validate", str(DEMO)],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.startswith("ok ")
