"""Pool-based active learning with margin sampling."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from ._validation import derive_rng, derive_seed
from .dataset import LabeledTable, UnlabeledTable
from .learner import NetConfig, ShallowNetClassifier, train

MAX_INITIAL_DRAWS = 100


class OracleError(RuntimeError):
    pass


class LabelOracle:
    """Answers label queries by pool row index and counts them.

    Wraps any ``callable(index) -> int``; a human labeler can be plugged in
    the same way as the hidden-label lookup.
    """

    def __init__(self, answer: Callable[[int], int], n_rows: int | None = None):
        self._answer = answer
        self.n_rows = n_rows
        self.query_count = 0

    def query(self, index: int) -> int:
        index = int(index)
        if self.n_rows is not None and not 0 <= index < self.n_rows:
            raise IndexError(f"row {index} outside pool of {self.n_rows} rows")
        try:
            label = int(self._answer(index))
        except IndexError:
            raise
        except Exception as exc:
            raise OracleError(f"oracle failed on row {index}: {exc}") from exc
        self.query_count += 1
        return label

    __call__ = query


def make_hidden_label_oracle(target: UnlabeledTable) -> LabelOracle:
    if target.hidden_labels is None:
        raise ValueError("target table has no hidden labels")
    labels = target.hidden_labels
    return LabelOracle(lambda i: labels[i], n_rows=target.n_rows)


@dataclass(frozen=True)
class ActiveConfig:
    initial_size: int = 10
    budget: int = 100
    batch_per_query: int = 1
    net_config: NetConfig = field(default_factory=NetConfig)
    seed: int = 0

    def __post_init__(self):
        if self.initial_size < 1 or self.budget < 0 or self.batch_per_query < 1:
            raise ValueError("need initial_size >= 1, budget >= 0, batch_per_query >= 1")


@dataclass
class QueryRecord:
    iteration: int  # 0 for the initial draw
    row: int
    margin: float  # NaN for the initial draw
    label: int


@dataclass
class LabeledPool:
    """Queried rows of the target pool, in query order."""

    rows: list[int] = field(default_factory=list)
    labels: list[int] = field(default_factory=list)
    log: list[QueryRecord] = field(default_factory=list)

    @property
    def provenance(self) -> list[str]:
        return ["initial" if r.iteration == 0 else f"queried({r.iteration})" for r in self.log]

    def __len__(self) -> int:
        return len(self.rows)

    def to_table(self, pool: UnlabeledTable, class_count: int, n_queries: int | None = None) -> LabeledTable:
        """Labeled set made of the initial rows plus the first ``n_queries`` queries."""
        n = len(self.rows)
        if n_queries is not None:
            n = sum(1 for r in self.log if r.iteration == 0) + n_queries
            if n > len(self.rows):
                raise ValueError(f"only {len(self.rows)} rows labeled, asked for {n}")
        rows = np.asarray(self.rows[:n], dtype=np.int64)
        return LabeledTable(pool.features[rows], np.asarray(self.labels[:n]), class_count)

    def write_log(self, path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["iteration", "row", "margin", "label"])
            for rec in self.log:
                writer.writerow([rec.iteration, rec.row, "" if np.isnan(rec.margin) else repr(rec.margin), rec.label])


def _initial_draw(pool: UnlabeledTable, oracle: LabelOracle, config: ActiveConfig, labeled: LabeledPool):
    """Random seed set with at least two classes; a redraw keeps no labels from the rejected one."""
    n = pool.n_rows
    answers: dict[int, int] = {}
    for attempt in range(MAX_INITIAL_DRAWS):
        rows = derive_rng(config.seed, 0, attempt).choice(n, size=config.initial_size, replace=False)
        labels = []
        for r in rows:
            r = int(r)
            # never ask the oracle twice about the same row
            if r not in answers:
                answers[r] = oracle.query(r)
            labels.append(answers[r])
        if len(set(labels)) >= 2:
            for r, y in zip(rows, labels):
                labeled.rows.append(int(r))
                labeled.labels.append(int(y))
                labeled.log.append(QueryRecord(0, int(r), float("nan"), int(y)))
            return answers
    raise ValueError(f"no initial draw of {config.initial_size} rows contained two classes")


def run_active_learning(
    pool: UnlabeledTable,
    oracle: LabelOracle,
    config: ActiveConfig,
    class_count: int | None = None,
) -> tuple[LabeledPool, ShallowNetClassifier]:
    """Grow a labeled set by repeatedly querying the smallest-margin pool row.

    After the initial draw the model is retrained on the labeled rows before
    every query (or every ``batch_per_query`` queries).  Exactly ``budget``
    rows are queried beyond the initial draw.  Returns the labeled pool and a
    model trained on all of it.
    """
    C = class_count if class_count is not None else pool.class_count
    if C is None:
        raise ValueError("class_count is required when the pool carries none")
    if pool.n_rows < config.initial_size + config.budget:
        raise ValueError(
            f"pool of {pool.n_rows} rows cannot supply {config.initial_size} + {config.budget} labels"
        )
    labeled = LabeledPool()
    answers = _initial_draw(pool, oracle, config, labeled)

    unlabeled = np.ones(pool.n_rows, dtype=bool)
    unlabeled[labeled.rows] = False
    base = config.net_config
    queried = 0
    iteration = 0
    while queried < config.budget:
        iteration += 1
        model = train(
            LabeledTable(pool.features[labeled.rows], labeled.labels, C),
            base.with_theta(base.hidden_nodes, derive_seed(config.seed, 1, iteration)),
        )
        candidates = np.flatnonzero(unlabeled)
        margins = model.margin(pool.features[candidates])
        take = min(config.batch_per_query, config.budget - queried)
        # stable sort: equal margins resolve to the lowest row index
        chosen = candidates[np.argsort(margins, kind="stable")[:take]]
        chosen_margins = np.sort(margins, kind="stable")[:take]
        for r, m in zip(chosen, chosen_margins):
            r = int(r)
            y = answers[r] if r in answers else oracle.query(r)
            unlabeled[r] = False
            labeled.rows.append(r)
            labeled.labels.append(int(y))
            labeled.log.append(QueryRecord(iteration, r, float(m), int(y)))
        queried += take

    final = train(
        LabeledTable(pool.features[labeled.rows], labeled.labels, C),
        base.with_theta(base.hidden_nodes, derive_seed(config.seed, 1, iteration + 1)),
    )
    return labeled, final
