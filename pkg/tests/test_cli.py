from __future__ import annotations

import json
import subprocess
import sys

import numpy as np
import pytest
from numpy.testing import assert_array_equal

from locopath import (
    BootstrapConfig,
    Dataset,
    Hypothesis,
    NormSpec,
    TopK,
    bootstrap_test,
    normalized_importance,
    screen,
)
from locopath.cli import DataError, ingest_csv, main, parse_args, parse_assignments, resolve_hypothesis, write_csv
from locopath.metric import INF


@pytest.fixture
def csv_file(tmp_path):
    rng = np.random.default_rng(3)
    X = rng.standard_normal((60, 6))
    y = X[:, 0] - X[:, 2] + rng.standard_normal(60)
    path = tmp_path / "data.csv"
    write_csv(Dataset(X, y, ("a", "b", "c", "d", "e", "f")), path)
    return path


def run_cli(argv, capsys):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def test_parse_single_coefficient_test():
    cfg = parse_args("test --null 1=0 --s 1 --t 1 --B 500 --alpha 0.05 --seed 7 data.csv --response y".split())
    assert cfg.command == "test"
    assert cfg.null == (("1", 0.0),)
    assert (cfg.B, cfg.alpha, cfg.seed, cfg.input, cfg.response) == (500, 0.05, 7, "data.csv", "y")
    assert cfg.spec == NormSpec(1, 1)


def test_parse_simultaneous_hypothesis():
    pairs = parse_assignments("1=1,11=0,12=0")
    h = resolve_hypothesis(pairs, [f"X{j + 1}" for j in range(20)])
    assert h.constrained == (0, 10, 11)
    assert h.values == (1.0, 0.0, 0.0)


def test_parse_inf_exponent():
    cfg = parse_args(["screen", "d.csv", "--response", "y", "--s", "inf", "--t", "2"])
    assert cfg.spec == NormSpec(INF, 2)


@pytest.mark.parametrize(
    "argv",
    [
        ["test", "--null", "1=0", "--s", "3", "d.csv", "--response", "y"],
        ["test", "--null", "1=", "d.csv", "--response", "y"],
        ["test", "--null", "0=1", "d.csv", "--response", "y"],
        ["test", "--null", "1=0,1=2", "d.csv", "--response", "y"],
        ["test", "--null", "1=0", "--response", "y"],
        ["test", "--null", "1=0", "d.csv", "--response", "y", "--bogus"],
        ["screen", "d.csv", "--response", "y", "--topk", "3", "--eps", "0.1"],
        ["importance", "d.csv"],
        ["frobnicate"],
        [],
    ],
)
def test_usage_errors_exit_2(argv, capsys):
    code, out, err = run_cli(argv, capsys)
    assert code == 2
    assert out == ""


def test_ingest_header_order(tmp_path):
    f = tmp_path / "x.csv"
    f.write_text("u,y,v\n1,2,3\n4,5,6\n7,8,9.5\n")
    data = ingest_csv(f, "y")
    assert data.names == ("u", "v")
    assert_array_equal(data.X, [[1, 3], [4, 6], [7, 9.5]])
    assert_array_equal(data.y, [2, 5, 8])


def test_ingest_reports_bad_row(tmp_path):
    f = tmp_path / "x.csv"
    rows = ["a,b,y"] + [f"{i},{i},{i}" for i in range(4)] + ["1,oops,2", "3,4,5"]
    f.write_text("\n".join(rows) + "\n")
    with pytest.raises(DataError, match="row 5"):
        ingest_csv(f, "y")


@pytest.mark.parametrize(
    "text,match",
    [("a,b\n1,2\n3,4\n", "no column named"), ("a,y\n1,2\n", "at least 2"), ("", "empty"), ("a,y\n1,2\n3\n", "fields")],
)
def test_ingest_errors(tmp_path, text, match):
    f = tmp_path / "x.csv"
    f.write_text(text)
    with pytest.raises(DataError, match=match):
        ingest_csv(f, "y")


def test_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    data = Dataset(rng.standard_normal((7, 3)) * 1e3, rng.standard_normal(7) / 3, ("p", "q", "r"))
    f = tmp_path / "rt.csv"
    write_csv(data, f, "resp")
    back = ingest_csv(f, "resp")
    assert_array_equal(back.X, data.X)
    assert_array_equal(back.y, data.y)
    assert back.names == data.names


def test_data_error_exit_1(tmp_path, capsys):
    f = tmp_path / "x.csv"
    f.write_text("a,y\n1,2\nz,3\n")
    code, out, err = run_cli(["screen", f, "--response", "y"], capsys)
    assert code == 1
    assert "row 2" in err
    code, _, err = run_cli(["screen", tmp_path / "missing.csv", "--response", "y"], capsys)
    assert code == 1
    code, _, err = run_cli(["test", "--null", "zz=0", f, "--response", "a"], capsys)
    assert code == 1


def test_screen_topk(tmp_path, capsys):
    rng = np.random.default_rng(1)
    X = rng.standard_normal((60, 80))
    f = tmp_path / "s.csv"
    write_csv(Dataset(X, X[:, 0] + rng.standard_normal(60)), f)
    code, out, _ = run_cli(["screen", "--topk", 59, "--s", 1, "--t", 1, f, "--response", "y"], capsys)
    assert code == 0
    doc = json.loads(out)
    assert len(doc["kept"]) == 59
    ref = screen(ingest_csv(f, "y"), NormSpec(1, 1), TopK(59))
    assert doc["kept"] == [f"X{j + 1}" for j in ref.kept]
    assert [doc["stats"][f"X{j + 1}"] for j in range(80)] == ref.stats.tolist()


def test_importance_rows(csv_file, capsys):
    code, out, _ = run_cli(
        ["importance", csv_file, "--response", "y", "--intervals", "--M", 10, "--pvalues", "--B", 20, "--seed", 2],
        capsys,
    )
    assert code == 0
    doc = json.loads(out)
    rows = doc["rows"]
    assert {"name", "raw", "percent", "lo", "hi", "pvalue"} <= set(rows[0])
    raws = [r["raw"] for r in rows]
    assert raws == sorted(raws, reverse=True)
    ref = normalized_importance(ingest_csv(csv_file, "y"))
    assert sum(r["importance"] for r in rows) == pytest.approx(1.0, abs=1e-12)
    assert {r["name"]: r["raw"] for r in rows} == dict(zip("abcdef", ref.raw.tolist()))
    assert all(r["lo"] <= r["hi"] for r in rows)


def test_importance_text_table(csv_file, capsys):
    code, out, _ = run_cli(["importance", csv_file, "--response", "y", "--format", "text", "--top", 3], capsys)
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0].split() == ["name", "raw", "percent", "lo", "hi"]
    assert len(lines) == 4
    pct = lines[1].split()[2]
    assert pct.endswith("%") and len(pct.split(".")[1]) == 2  # one decimal plus the sign


def test_test_matches_library(csv_file, capsys):
    code, out, _ = run_cli(["test", "--null", "a=0", "--B", 30, "--seed", 5, csv_file, "--response", "y"], capsys)
    assert code == 0
    doc = json.loads(out)
    ref = bootstrap_test(ingest_csv(csv_file, "y"), Hypothesis((0,), (0.0,)), NormSpec(), BootstrapConfig(B=30, seed=5))
    assert (doc["statistic"], doc["pvalue"], doc["critical"], doc["reject"]) == (
        ref.statistic,
        ref.pvalue,
        ref.critical,
        ref.reject,
    )
    code, out2, _ = run_cli(["test", "--null", "1=0", "--B", 30, "--seed", 5, csv_file, "--response", "y"], capsys)
    assert out2 == out


def test_output_file_and_simulate(tmp_path, capsys):
    out_file = tmp_path / "sim.json"
    rec_file = tmp_path / "rec.csv"
    argv = ["simulate", "--experiment", "size", "--n", 30, "--p", 5, "--beta", "2=1", "--reps", 3, "--B", 10]
    code, out, _ = run_cli(argv + ["--output", out_file, "--records", rec_file], capsys)
    assert code == 0 and out == ""
    doc = json.loads(out_file.read_text())
    assert [c["method"] for c in doc["cells"]] == ["loco(1,1)", "t-test"]
    assert len(rec_file.read_text().strip().splitlines()) == 4


def test_simulate_power_and_screening(capsys):
    code, out, _ = run_cli(
        ["simulate", "--experiment", "power", "--n", 30, "--p", 5, "--reps", 2, "--B", 5, "--grid", "0,1"], capsys
    )
    assert code == 0
    assert [c["value"] for c in json.loads(out)["cells"]] == [0.0, 0.0, 1.0, 1.0]
    code, out, _ = run_cli(
        ["simulate", "--experiment", "screening", "--n", 20, "--p", 30, "--beta", "1=3,2=3", "--reps", 2, "--format", "text"],
        capsys,
    )
    assert code == 0
    assert "sis" in out


def test_module_entry_point(csv_file):
    proc = subprocess.run(
        [sys.executable, "-m", "locopath", "screen", str(csv_file), "--response", "y", "--topk", "2"],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert len(json.loads(proc.stdout)["kept"]) == 2
