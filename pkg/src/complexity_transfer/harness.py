"""End-to-end runs, budget sweeps and baselines."""

from __future__ import annotations

import csv
import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ._validation import derive_seed
from .active import ActiveConfig, make_hidden_label_oracle, run_active_learning
from .adapt import run_map_adaptation
from .capacity import CapacityParams
from .dataset import (
    LabeledTable,
    ShiftSpec,
    SplitSpec,
    UnlabeledTable,
    load_csv,
    make_shifted_pair,
    split_unlabeled,
)
from .learner import train, zero_one_error
from .prior import ComplexityPrior, PriorConfig, estimate_prior


@dataclass
class ExperimentSpec:
    """What to run.

    ``source`` is a labeled table, a CSV path or a :class:`ShiftSpec`; with a
    ShiftSpec the target comes from the same generator and ``target`` is
    ignored.  A precomputed ``prior`` skips the source sweep.
    """

    source: LabeledTable | ShiftSpec | str | Path
    target: UnlabeledTable | LabeledTable | str | Path | None = None
    prior_config: PriorConfig = field(default_factory=PriorConfig)
    active_config: ActiveConfig = field(default_factory=ActiveConfig)
    alpha: float = 1.0
    delta: float = 0.05
    budgets: list[int] = field(default_factory=lambda: [100])
    repetitions: int = 10
    test_fraction: float = 0.5
    seed: int = 0
    label_column: str = "label"
    prior: ComplexityPrior | None = None

    def __post_init__(self):
        self.budgets = [int(b) for b in self.budgets]
        if not self.budgets or self.budgets != sorted(self.budgets) or self.budgets[0] < 0:
            raise ValueError("budgets must be a non-empty ascending list of non-negative integers")
        if self.repetitions < 1:
            raise ValueError("repetitions must be >= 1")

    def resolve(self) -> tuple[LabeledTable, UnlabeledTable]:
        if isinstance(self.source, ShiftSpec):
            return make_shifted_pair(self.source)
        source = self.source
        if not isinstance(source, LabeledTable):
            source = load_csv(source, self.label_column)
        target = self.target
        if target is None:
            raise ValueError("a target table is required unless the source is a ShiftSpec")
        if isinstance(target, (str, Path)):
            target = load_csv(target, self.label_column)
        if isinstance(target, LabeledTable):
            target = target.hide_labels()
        if target.n_features != source.n_features:
            raise ValueError("source and target feature counts differ")
        return source, target


@dataclass
class RunReport:
    method: str
    rows: list[dict]
    prior: ComplexityPrior | None = None
    prior_seconds: float = 0.0
    theta: int | None = None

    def aggregates(self) -> list[dict]:
        """Mean and sample standard deviation of accuracy per budget."""
        out = []
        for b in sorted({r["budget"] for r in self.rows}):
            acc = np.array([r["accuracy"] for r in self.rows if r["budget"] == b])
            src = np.array([r["source_accuracy"] for r in self.rows if r["budget"] == b])
            out.append({
                "budget": b,
                "n": int(acc.size),
                "mean_accuracy": float(acc.mean()),
                "std_accuracy": float(acc.std(ddof=1)) if acc.size > 1 else 0.0,
                "mean_source_accuracy": float(src.mean()),
                "std_source_accuracy": float(src.std(ddof=1)) if src.size > 1 else 0.0,
            })
        return out

    def accuracies(self, budget: int) -> np.ndarray:
        return np.array([r["accuracy"] for r in self.rows if r["budget"] == budget])

    def to_dict(self) -> dict:
        d = {
            "method": self.method,
            "prior_seconds": self.prior_seconds,
            "aggregates": self.aggregates(),
            "runs": self.rows,
        }
        if self.prior is not None:
            d["prior"] = json.loads(self.prior.to_json())
        if self.theta is not None:
            d["theta"] = self.theta
        return d

    def write(self, out_dir, stem: str = "report") -> None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / f"{stem}.json").write_text(json.dumps(self.to_dict(), indent=2), encoding="utf-8")
        with (out_dir / f"{stem}_curves.csv").open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["budget", "mean_accuracy", "std_accuracy"])
            for a in self.aggregates():
                writer.writerow([a["budget"], repr(a["mean_accuracy"]), repr(a["std_accuracy"])])


def _source_model(source: LabeledTable, theta: int, spec: ExperimentSpec):
    net = spec.active_config.net_config.with_theta(theta, derive_seed(spec.seed, 7, theta))
    return train(source, net)


def _protocol(spec: ExperimentSpec, source, target, query_theta: int, fit_budget):
    """Shared loop: resplit, query to the largest budget, then score every budget prefix.

    ``fit_budget(labeled, rep_seed)`` returns ``(accuracy_model, theta)`` for
    one labeled prefix.
    """
    if target.hidden_labels is None:
        raise ValueError("target needs hidden labels for the oracle and the test pool")
    C = source.class_count
    source_model = _source_model(source, query_theta, spec)
    rows = []
    max_budget = spec.budgets[-1]
    for rep in range(spec.repetitions):
        rep_seed = derive_seed(spec.seed, 1, rep)
        pool, test_pool = split_unlabeled(target, SplitSpec(1.0 - spec.test_fraction, derive_seed(rep_seed, 0)))
        test = test_pool.reveal()
        source_acc = 1.0 - zero_one_error(source_model, test)
        oracle = make_hidden_label_oracle(pool)
        ac = spec.active_config
        config = ActiveConfig(
            initial_size=ac.initial_size,
            budget=max_budget,
            batch_per_query=ac.batch_per_query,
            net_config=ac.net_config.with_theta(query_theta),
            seed=derive_seed(rep_seed, 1),
        )
        t0 = time.perf_counter()
        try:
            labeled_pool, _ = run_active_learning(pool, oracle, config, class_count=C)
        except Exception as exc:
            raise RuntimeError(f"repetition {rep}: active learning failed: {exc}") from exc
        active_seconds = time.perf_counter() - t0
        for b in spec.budgets:
            labeled = labeled_pool.to_table(pool, C, n_queries=b)
            t0 = time.perf_counter()
            try:
                model, theta = fit_budget(labeled, derive_seed(rep_seed, 2, b))
            except Exception as exc:
                raise RuntimeError(f"budget {b}, repetition {rep}: {exc}") from exc
            rows.append({
                "budget": b,
                "repetition": rep,
                "accuracy": 1.0 - zero_one_error(model, test),
                "theta_star": int(theta),
                "source_accuracy": source_acc,
                "labeled_size": labeled.n_rows,
                "oracle_queries": oracle.query_count,
                "active_seconds": active_seconds,
                "adapt_seconds": time.perf_counter() - t0,
            })
    return rows


def fit_prior(spec: ExperimentSpec, source: LabeledTable) -> tuple[ComplexityPrior, float]:
    if spec.prior is not None:
        return spec.prior, 0.0
    t0 = time.perf_counter()
    prior = estimate_prior(source, spec.prior_config)
    return prior, time.perf_counter() - t0


def run_experiment(spec: ExperimentSpec) -> RunReport:
    """Full pipeline per repetition: split the target, query, pick the MAP width, test.

    The prior is fitted once (or taken from ``spec.prior``) and reused by every
    repetition and budget; the source-only model uses the prior-mean width.
    """
    source, target = spec.resolve()
    prior, prior_seconds = fit_prior(spec, source)
    C = source.class_count
    grid_bounds = spec.prior_config.grid_bounds
    template = spec.active_config.net_config

    def fit_budget(labeled, seed):
        params = CapacityParams(labeled.n_features, C, spec.alpha, spec.delta, labeled.n_rows)
        result = run_map_adaptation(prior, labeled, params, template.with_theta(1, seed), grid_bounds)
        return result.final_model, result.theta_star

    rows = _protocol(spec, source, target, prior.mean_theta, fit_budget)
    return RunReport("map", rows, prior, prior_seconds)


def run_baseline_fixed_theta(spec: ExperimentSpec, theta: int) -> RunReport:
    """The same protocol with the width fixed at ``theta``: no prior, no MAP step."""
    source, target = spec.resolve()
    template = spec.active_config.net_config

    def fit_budget(labeled, seed):
        return train(labeled, template.with_theta(theta, seed)), theta

    rows = _protocol(spec, source, target, int(theta), fit_budget)
    return RunReport("fixed_theta", rows, None, 0.0, int(theta))
