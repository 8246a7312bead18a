import json

import pytest

from complexity_transfer.cli import main

FAST = ["--epochs", "10", "--theta-min", "2", "--theta-max", "6"]


@pytest.fixture(scope="module")
def data(tmp_path_factory):
    out = tmp_path_factory.mktemp("data")
    assert main(["synth", "--source-size", "120", "--target-size", "200", "--seed", "2", "--out-dir", str(out)]) == 0
    return out


def run(capsys, argv):
    code = main(argv)
    captured = capsys.readouterr()
    return code, (json.loads(captured.out) if code == 0 else captured.err)


def test_synth_writes_csvs(data):
    assert (data / "source.csv").read_text().splitlines()[0] == "x0,x1,label"
    assert len((data / "target.csv").read_text().splitlines()) == 201


def test_prior_then_adapt(data, tmp_path, capsys):
    code, out = run(capsys, ["prior", "--source", str(data / "source.csv"), "--k", "2",
                             "--out-dir", str(tmp_path), *FAST])
    assert code == 0
    assert out["models_trained"] == 2 * 5
    prior = json.loads((tmp_path / "prior.json").read_text())
    assert prior["mu"] == out["mu"]

    code, out = run(capsys, ["adapt", "--prior", str(tmp_path / "prior.json"), "--target", str(data / "target.csv"),
                             "--budget", "12", "--initial", "6", "--out-dir", str(tmp_path / "a"), *FAST])
    assert code == 0
    assert out["oracle_queries"] == 18
    lo, hi = out["search_interval"]
    assert out["models_trained"] <= (hi - lo + 1) + 12 + 1
    assert 0 <= out["test_accuracy"] <= 1
    for name in ("query_log.csv", "posterior.csv", "model.json", "result.json"):
        assert (tmp_path / "a" / name).exists()


def test_sweep_and_baseline(data, tmp_path, capsys):
    common = ["--source", str(data / "source.csv"), "--target", str(data / "target.csv"), "--k", "2",
              "--budgets", "0,6", "--repetitions", "2", "--initial", "6", "--batch-per-query", "3",
              "--out-dir", str(tmp_path), *FAST]
    code, out = run(capsys, ["sweep", *common])
    assert code == 0
    assert [a["budget"] for a in out["aggregates"]] == [0, 6]
    assert (tmp_path / "sweep_curves.csv").exists()
    code, out = run(capsys, ["baseline", *common, "--theta", "4"])
    assert code == 0
    assert (tmp_path / "baseline.json").exists()


def test_errors_exit_nonzero(data, tmp_path, capsys):
    code, err = run(capsys, ["prior", "--source", str(tmp_path / "missing.csv"), "--k", "2", *FAST])
    assert code == 2
    assert "error" in err
    code, err = run(capsys, ["sweep", "--source", str(data / "source.csv"), "--target", str(data / "target.csv"),
                             "--budgets", "9,3", *FAST])
    assert code == 2
