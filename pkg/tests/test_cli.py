"""Command-line driver: formats, determinism, validation, oracle checking."""

import csv
import io
import json

import pytest
from click.testing import CliRunner

from hgmtrace.cli import main

ARGS = ["--alpha", "1/4,3/4", "--beta", "1/6,5/6", "--z", "314/159"]


def run(*extra, **kwargs):
    return CliRunner().invoke(main, ARGS + list(extra), **kwargs)


def test_jsonl_output():
    res = run("--limit", "60", "--no-cache")
    assert res.exit_code == 0, res.output
    recs = [json.loads(line) for line in res.output.strip().splitlines()]
    by_p = {r["p"]: r for r in recs}
    assert by_p[2]["class"] == "wild" and by_p[2]["residue"] is None
    assert by_p[5]["class"] == "tame" and by_p[5]["trace"] is None
    assert by_p[7]["method"] == "oracle" and by_p[7]["class"] == "good"
    assert by_p[41] == {"p": 41, "class": "good", "e": 1, "residue": 10, "trace": 10, "method": "amortized"}
    assert [r["p"] for r in recs] == sorted(r["p"] for r in recs)


def test_csv_jsonl_equivalence(tmp_path):
    res_j = run("--limit", "60", "--no-cache", "--format", "jsonl")
    res_c = run("--limit", "60", "--no-cache", "--format", "csv")
    assert res_j.exit_code == 0 and res_c.exit_code == 0
    jrecs = [json.loads(line) for line in res_j.output.strip().splitlines()]
    crecs = list(csv.reader(io.StringIO(res_c.output)))
    assert len(jrecs) == len(crecs)
    for j, c in zip(jrecs, crecs):
        want = [j["p"], j["class"], j["e"], j["residue"], j["trace"], j["method"]]
        assert c == ["" if v is None else str(v) for v in want]


def test_byte_identical_runs():
    a = run("--limit", "120", "--no-cache")
    b = run("--limit", "120", "--no-cache")
    assert a.exit_code == b.exit_code == 0
    assert a.output == b.output


def test_output_file(tmp_path):
    out = tmp_path / "traces.jsonl"
    res = run("--limit", "40", "--no-cache", "--output", str(out))
    assert res.exit_code == 0
    assert res.output == ""
    assert len(out.read_text().splitlines()) == 12  # primes up to 40


def test_cache_dir_and_env(tmp_path, monkeypatch):
    d1 = tmp_path / "via-flag"
    res = run("--limit", "60", "--cache-dir", str(d1))
    assert res.exit_code == 0 and list(d1.glob("*.bin"))
    d2 = tmp_path / "via-env"
    monkeypatch.setenv("HGMTRACE_CACHE_DIR", str(d2))
    res2 = run("--limit", "60")
    assert res2.exit_code == 0 and list(d2.glob("*.bin"))
    assert res.output == res2.output


def test_oracle_check_all():
    res = run("--limit", "120", "--no-cache", "--oracle-check", "all")
    assert res.exit_code == 0, res.output


def test_oracle_check_count_validation():
    res = run("--limit", "60", "--no-cache", "--oracle-check", "10000")
    assert res.exit_code != 0
    assert "exceeds" in res.output


def test_invalid_datum_fails():
    res = CliRunner().invoke(
        main,
        ["--alpha", "1/4,1/2", "--beta", "1/6,5/6", "--z", "1/2", "--limit", "30"],
    )
    assert res.exit_code != 0
    assert "Galois" in res.output


def test_invalid_z_fails():
    res = CliRunner().invoke(
        main,
        ["--alpha", "1/4,3/4", "--beta", "1/6,5/6", "--z", "abc", "--limit", "30"],
    )
    assert res.exit_code != 0
    assert "cannot parse z" in res.output


def test_tiny_limit_wild_only():
    res = run("--limit", "2", "--no-cache")
    assert res.exit_code == 0
    recs = [json.loads(line) for line in res.output.strip().splitlines()]
    assert recs == [
        {"p": 2, "class": "wild", "e": None, "residue": None, "trace": None, "method": None}
    ]


def test_phase_timings_on_stderr():
    res = CliRunner().invoke(main, ARGS + ["--limit", "60", "--no-cache", "--phase-timings"])
    assert res.exit_code == 0
    assert "phase1" in res.stderr and "phase1" not in res.stdout
