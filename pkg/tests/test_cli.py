import csv
import io
import json

import numpy as np
import pytest

from pnnsmooth.bench import CSV_COLUMNS, SUMMARY_COLUMNS, ExperimentConfig, cmd_run, cmd_sweep
from pnnsmooth.cli import main

MIX = "k=6,dim=2,n=60,sigma=0.02,sep=0.2,seed=4"


def _rows(path):
    return list(csv.DictReader(io.StringIO(path.read_text())))


def _strip_time(rows):
    return [{k: v for k, v in r.items() if k != "time_s"} for r in rows]


def test_run_writes_exact_columns(tmp_path):
    out = tmp_path / "r.csv"
    assert main(["run", "--mixture", MIX, "--k", "6", "--seeder", "km++", "--reps", "3",
                 "--out", str(out)]) == 0
    header = out.read_text().splitlines()[0]
    assert header == ",".join(CSV_COLUMNS) == "rep,seed,sse,iterations,ndc,time_s,ci"
    rows = _rows(out)
    assert [r["seed"] for r in rows] == ["0", "1", "2"]
    assert all(r["ci"] == "0" or r["ci"].isdigit() for r in rows)
    summary = _rows(tmp_path / "r.csv.summary.csv")
    assert list(summary[0]) == list(SUMMARY_COLUMNS)
    assert float(summary[0]["mean_sse"]) == pytest.approx(np.mean([float(r["sse"]) for r in rows]))


def test_run_is_deterministic(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    args = ["run", "--mixture", MIX, "--k", "6", "--seeder", "pnns(gkm++)", "--accel", "ham",
            "--reps", "4", "--seed", "9"]
    assert main(args + ["--out", str(a)]) == 0
    assert main(args + ["--out", str(b)]) == 0
    assert _strip_time(_rows(a)) == _strip_time(_rows(b))


def test_ci_column_empty_without_ground_truth(tmp_path):
    pts = tmp_path / "p.txt"
    assert main(["gen", "--mixture", MIX, "--out", str(pts)]) == 0
    out = tmp_path / "o.csv"
    assert main(["run", "--data", str(pts), "--k", "3", "--out", str(out)]) == 0
    assert _rows(out)[0]["ci"] == ""
    assert main(["run", "--data", str(pts), "--gt", str(pts) + ".gt", "--k", "6",
                 "--seeder", "pnns(maxmin)", "--out", str(out)]) == 0
    assert _rows(out)[0]["ci"] == "0"


def test_k_equals_n_gives_zero_sse():
    cfg = ExperimentConfig(k=360, seeder="unif", mixture=MIX, reps=1)
    assert cmd_run(cfg).summary["mean_sse"] == 0.0


def test_json_output(tmp_path):
    out = tmp_path / "r.json"
    assert main(["run", "--mixture", MIX, "--k", "6", "--seeder", "ref(km++)", "--reps", "2",
                 "--format", "json", "--out", str(out), "--scale", "unitbox"]) == 0
    doc = json.loads(out.read_text())
    assert doc["metadata"]["columns"] == list(CSV_COLUMNS)
    assert doc["metadata"]["config"]["seeder"] == "ref(km++)"
    assert doc["metadata"]["config"]["scaling"] == "unit_box"
    assert [r["rep"] for r in doc["rows"]] == [0, 1]
    assert set(doc["rows"][0]) == set(CSV_COLUMNS)
    assert doc["summary"]["reps"] == 2


def test_stdout_csv(capsys):
    assert main(["run", "--mixture", MIX, "--k", "2"]) == 0
    assert capsys.readouterr().out.startswith("rep,seed,sse")


def test_single_sweep_equals_run():
    cfg = ExperimentConfig(k=6, seeder="km++", mixture=MIX, reps=3)
    run = cmd_run(cfg).summary
    rows, errors = cmd_sweep([ExperimentConfig(k=6, seeder="km++", mixture=MIX, reps=3)])
    assert not errors
    strip = lambda r: {k: v for k, v in r.items() if "time" not in k}
    assert strip(rows[0]) == strip(run)


def test_sweep_over_accels_gives_identical_sse(tmp_path, capsys):
    out = tmp_path / "s.csv"
    args = ["sweep", "--mixture", MIX, "--k", "8", "--seeder", "unif", "--reps", "3",
            "--out", str(out)]
    for a in ("naive", "rc", "elk", "ham", "yy", "exp"):
        args += ["--accel", a]
    assert main(args) == 0
    rows = _rows(out)
    assert len(rows) == 6
    assert len({(r["mean_sse"], r["min_sse"], r["mean_iters"]) for r in rows}) == 1
    assert "dataset" in capsys.readouterr().out


def test_sweep_pnns_beats_kmpp():
    mix = "k=15,dim=2,n=100,sigma=0.03,sep=0.12,seed=2"
    rows, _ = cmd_sweep([ExperimentConfig(k=15, seeder=s, mixture=mix, reps=30)
                         for s in ("km++", "pnns(km++)")])
    assert rows[1]["mean_sse"] < rows[0]["mean_sse"]


def test_sweep_member_failure_is_reported(capsys):
    args = ["sweep", "--mixture", MIX, "--k", "6", "--seeder", "ref(unif);J=100",
            "--seeder", "unif"]
    assert main(args) == 1
    captured = capsys.readouterr()
    assert "unif" in captured.out and "error" in captured.err


def test_bad_input_exit_codes(tmp_path, capsys):
    assert main(["run", "--data", str(tmp_path / "missing.txt"), "--k", "2"]) != 0
    assert main(["run", "--mixture", MIX, "--k", "2", "--seeder", "pnns(pnns(unif))"]) != 0
    with pytest.raises(SystemExit):
        main(["run", "--k", "2"])
    with pytest.raises(SystemExit):
        main(["run", "--mixture", MIX, "--k", "2", "--accel", "kd"])


def test_config_validation():
    with pytest.raises(ValueError):
        ExperimentConfig(k=2, seeder="unif", mixture=MIX, reps=0)
    with pytest.raises(ValueError):
        ExperimentConfig(k=2, seeder="unif", mixture=MIX, threads=0)
    with pytest.raises(ValueError):
        ExperimentConfig(k=2, seeder="unif", mixture=MIX, data_path="x")


def test_selftest_passes(capsys):
    assert main(["selftest"]) == 0
    out = capsys.readouterr().out
    assert "FAIL" not in out and out.count("PASS") >= 8


def test_selftest_detects_tampering(capsys):
    assert main(["selftest", "--tamper"]) != 0
    assert "FAIL  seeding NDC exactness" in capsys.readouterr().out
