import json
import subprocess
import sys

import numpy as np
import pytest
from scipy import stats

from logcave.cli import main, read_points_csv
from logcave.oracle import exact_partition_1d


@pytest.fixture
def workdir(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    monkeypatch.delenv("LOGCAVE_SEED", raising=False)
    monkeypatch.delenv("LOGCAVE_MANIFEST", raising=False)
    (tmp_path / "two.csv").write_text("0\n1\n")
    return tmp_path


def run(*argv):
    return main([str(a) for a in argv])


def manifest(path):
    return [json.loads(line) for line in path.read_text().splitlines()]


def fit_two(workdir, name="fit.json", seed=7):
    rc = run("fit", "two.csv", "--epsilon", "0.05", "--max-iters", 300, "--seed", seed,
             "-o", name)
    assert rc == 0
    return json.loads((workdir / name).read_text())


def test_csv_header_detection(tmp_path):
    p = tmp_path / "h.csv"
    p.write_text("x,y\n0.5,1e-3\n-2,3\n")
    assert read_points_csv(p).tolist() == [[0.5, 0.001], [-2.0, 3.0]]


def test_fit_two_points(workdir):
    doc = fit_two(workdir)
    assert doc["schemaVersion"] == 1
    assert doc["points"] == [[0.0], [1.0]]
    assert np.abs(doc["y"]).max() < 0.3
    assert doc["loglik"] == pytest.approx(0.0, abs=0.05)
    assert doc["seed"] == 7 and doc["complete"]
    for key in ("acceptanceRate", "projectionHits", "samplerDelta"):
        assert key in doc["diagnostics"]
    rec = manifest(workdir / "logcave-runs.jsonl")
    assert len(rec) == 1 and rec[0]["command"] == "fit" and rec[0]["exitCode"] == 0


def test_fit_is_byte_identical_except_clock(workdir):
    a = fit_two(workdir, "a.json")
    b = fit_two(workdir, "b.json")
    a.pop("wallClockSeconds")
    b.pop("wallClockSeconds")
    assert json.dumps(a) == json.dumps(b)


def test_seed_from_environment(workdir, monkeypatch):
    monkeypatch.setenv("LOGCAVE_SEED", "7")
    assert run("fit", "two.csv", "--epsilon", "0.05", "--max-iters", 300, "-o", "env.json") == 0
    env = json.loads((workdir / "env.json").read_text())
    flag = fit_two(workdir)
    assert env["y"] == flag["y"]


def test_unseeded_run_records_seed(workdir):
    run("partition", "--points", "two.csv", "--heights", "0,0", "--delta", "0.05", "-o", "p.json")
    rec = manifest(workdir / "logcave-runs.jsonl")[-1]
    assert isinstance(rec["seed"], int)


def test_trace_csv(workdir):
    assert run("fit", "two.csv", "--max-iters", 100, "--seed", 1, "-o", "f.json",
               "--trace", "trace.csv") == 0
    lines = (workdir / "trace.csv").read_text().splitlines()
    assert lines[0] == "iteration,surrogate,loglik"
    assert len(lines) > 2


def test_degenerate_sample_exit_3(workdir, capsys):
    (workdir / "one.csv").write_text("0.5,0.5\n1,1\n")
    assert run("fit", "one.csv") == 3
    assert "rank" in capsys.readouterr().err
    assert manifest(workdir / "logcave-runs.jsonl")[-1]["exitCode"] == 3


@pytest.mark.parametrize("text", ["0\nabc\n", "", "0,1\n2\n", "0\nnan\n"])
def test_malformed_csv_exit_2(workdir, text):
    (workdir / "bad.csv").write_text(text)
    assert run("fit", "bad.csv") == 2


def test_missing_file_exit_2(workdir):
    assert run("fit", "nope.csv") == 2


def test_eval_uniform_and_round_trip(workdir):
    fit_two(workdir)
    (workdir / "q.csv").write_text("0.5\n2\n0\n1\n")
    assert run("eval", "fit.json", "q.csv", "-o", "dens.csv", "--seed", 1) == 0
    vals = np.loadtxt(workdir / "dens.csv")
    doc = json.loads((workdir / "fit.json").read_text())
    y, A = np.array(doc["y"]), doc["logPartition"]
    assert vals[1] == 0.0
    assert vals[0] == pytest.approx(1.0, abs=0.15)
    # poles reproduce exp(y_i - A) with the stored normalizer
    assert vals[2:] == pytest.approx(np.exp(y - A), rel=1e-12)
    truth = np.exp(y - exact_partition_1d([0.0, 1.0], y))
    assert vals[2:] == pytest.approx(truth, rel=2 * 0.01 + 0.01)


def test_eval_bad_inputs(workdir):
    (workdir / "junk.json").write_text("{not json")
    (workdir / "q.csv").write_text("0.5\n")
    assert run("eval", "junk.json", "q.csv") == 2
    fit_two(workdir)
    (workdir / "q2.csv").write_text("0.5,0.5\n")
    assert run("eval", "fit.json", "q2.csv") == 2


def test_sample_uniform_ks(workdir):
    fit_two(workdir)
    assert run("sample", "fit.json", "--count", 2000, "--seed", 3, "-o", "s.csv") == 0
    Z = np.loadtxt(workdir / "s.csv")
    assert Z.shape == (2000,)
    assert np.all((Z >= 0) & (Z <= 1))
    doc = json.loads((workdir / "fit.json").read_text())
    y = np.array(doc["y"])
    A = exact_partition_1d([0.0, 1.0], y)
    a, b = y

    def cdf(t):
        # exp of the line from a to b, integrated from 0 to t
        s = b - a
        if abs(s) < 1e-12:
            return np.clip(t, 0, 1)
        return np.clip((np.exp(a + s * np.clip(t, 0, 1)) - np.exp(a)) / s / np.exp(A), 0, 1)

    assert stats.kstest(Z, cdf).pvalue > 0.01
    rec = manifest(workdir / "logcave-runs.jsonl")[-1]
    n = rec["outcome"]["proposals"]
    assert rec["outcome"]["acceptanceRate"] >= 0.5 - 3 * np.sqrt(0.25 / n)


def test_partition_from_heights(workdir, capsys):
    assert run("partition", "--points", "two.csv", "--heights", "1,-1", "--seed", 2) == 0
    out = json.loads(capsys.readouterr().out)
    assert abs(out["logPartition"] - 0.161439) <= np.log(1 + 3 * 0.01)
    assert out["relError"] > 0


def test_partition_requires_input(workdir):
    assert run("partition") == 2
    assert run("partition", "--points", "two.csv", "--heights", "1") == 2
    assert run("partition", "--points", "two.csv", "--heights", "0,0", "--delta", "0.2") == 2


def test_manifest_is_append_only(workdir):
    path = workdir / "runs.jsonl"
    for _ in range(3):
        run("partition", "--points", "two.csv", "--heights", "0,0", "--delta", "0.05",
            "--seed", 1, "--manifest", path, "-o", "p.json")
    assert len(manifest(path)) == 3


def test_console_entry_point(workdir):
    res = subprocess.run([sys.executable, "-m", "logcave.cli", "--version"],
                         capture_output=True, text=True)
    assert res.returncode == 0 and "logcave" in res.stdout
