import csv
import json

import numpy as np
import pytest

from complexity_transfer.active import ActiveConfig
from complexity_transfer.dataset import ShiftSpec, make_shifted_pair
from complexity_transfer.harness import ExperimentSpec, RunReport, run_baseline_fixed_theta, run_experiment
from complexity_transfer.learner import NetConfig
from complexity_transfer.prior import ComplexityPrior, PriorConfig

NET = NetConfig(epochs=15)
TIMINGS = {"active_seconds", "adapt_seconds"}


def small_spec(**kw):
    base = dict(
        source=ShiftSpec(source_size=120, target_size=200, marginal_shift=0.5, posterior_shift=0.2, seed=1),
        prior_config=PriorConfig(k=2, theta_grid=tuple(range(2, 9)), net_template=NET, seed=2),
        active_config=ActiveConfig(initial_size=6, batch_per_query=4, net_config=NET),
        budgets=[0, 8, 16],
        repetitions=2,
        seed=3,
    )
    base.update(kw)
    return ExperimentSpec(**base)


def strip(rows):
    return [{k: v for k, v in r.items() if k not in TIMINGS} for r in rows]


@pytest.fixture(scope="module")
def report():
    return run_experiment(small_spec())


def test_rows_cover_budgets_and_repetitions(report):
    assert [(r["budget"], r["repetition"]) for r in report.rows] == [
        (b, rep) for rep in range(2) for b in (0, 8, 16)
    ]
    assert [r["labeled_size"] for r in report.rows[:3]] == [6, 14, 22]
    assert all(r["oracle_queries"] == 22 for r in report.rows)
    lo, hi = 2, 8
    assert all(lo <= r["theta_star"] <= hi for r in report.rows)


def test_deterministic_apart_from_timings(report):
    again = run_experiment(small_spec())
    assert strip(again.rows) == strip(report.rows)
    assert again.prior == report.prior


def test_aggregates_recomputable(report):
    for agg in report.aggregates():
        acc = report.accuracies(agg["budget"])
        assert agg["n"] == 2
        assert agg["mean_accuracy"] == pytest.approx(acc.mean())
        assert agg["std_accuracy"] == pytest.approx(acc.std(ddof=1))


def test_persisted_prior_skips_sweep():
    prior = ComplexityPrior(4.0, 1.0)
    rep = run_experiment(small_spec(prior=prior, budgets=[4]))
    assert rep.prior_seconds == 0.0
    assert rep.prior is prior
    assert all(3 <= r["theta_star"] <= 5 for r in rep.rows)


def test_fixed_theta_baseline():
    rep = run_baseline_fixed_theta(small_spec(budgets=[8]), 6)
    assert rep.method == "fixed_theta"
    assert {r["theta_star"] for r in rep.rows} == {6}
    assert all(0 <= r["accuracy"] <= 1 for r in rep.rows)


def test_table_inputs():
    source, target = make_shifted_pair(ShiftSpec(source_size=120, target_size=200, seed=4))
    rep = run_experiment(small_spec(source=source, target=target.reveal(), prior=ComplexityPrior(3.0, 1.0),
                                    budgets=[4], repetitions=1))
    assert len(rep.rows) == 1
    with pytest.raises(ValueError):
        small_spec(source=source).resolve()


def test_budget_validation():
    with pytest.raises(ValueError):
        small_spec(budgets=[10, 5])
    with pytest.raises(ValueError):
        small_spec(repetitions=0)


def test_report_files(report, tmp_path):
    report.write(tmp_path, "run")
    data = json.loads((tmp_path / "run.json").read_text())
    assert data["method"] == "map"
    assert len(data["runs"]) == 6
    assert data["prior"]["mu"] == report.prior.mu
    with open(tmp_path / "run_curves.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert [int(r["budget"]) for r in rows] == [0, 8, 16]
    assert float(rows[1]["mean_accuracy"]) == report.aggregates()[1]["mean_accuracy"]


def test_single_repetition_std_is_zero():
    rep = RunReport("map", [{"budget": 5, "accuracy": 0.7, "source_accuracy": 0.5}])
    assert rep.aggregates()[0]["std_accuracy"] == 0.0
    np.testing.assert_array_equal(rep.accuracies(5), [0.7])
