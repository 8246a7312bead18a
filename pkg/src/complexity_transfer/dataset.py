"""Featurized classification tables, splits, bootstrap samples and a shifted-pair generator."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ._validation import check_fraction, check_labels, derive_rng

MAX_RESAMPLE_ATTEMPTS = 100


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class LabeledTable:
    """Feature matrix with one class index per row.

    Arrays are copied and made read-only on construction, so a table can be
    shared freely between threads and derived subsets.
    """

    features: np.ndarray
    labels: np.ndarray
    class_count: int
    label_names: tuple[str, ...] | None = field(default=None)

    def __post_init__(self):
        X = np.asarray(self.features, dtype=np.float64)
        if X.ndim != 2 or X.shape[0] < 1 or X.shape[1] < 1:
            raise ValueError(f"features must be a non-empty 2-D matrix, got shape {X.shape}")
        if not np.all(np.isfinite(X)):
            raise ValueError("features must be finite")
        if int(self.class_count) < 2:
            raise ValueError("class_count must be at least 2")
        y = check_labels(self.labels, X.shape[0], int(self.class_count))
        object.__setattr__(self, "features", _frozen(X))
        object.__setattr__(self, "labels", _frozen(y))
        object.__setattr__(self, "class_count", int(self.class_count))

    @property
    def n_rows(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    def __len__(self) -> int:
        return self.n_rows

    def take(self, rows) -> "LabeledTable":
        rows = np.asarray(rows, dtype=np.int64)
        return LabeledTable(self.features[rows], self.labels[rows], self.class_count, self.label_names)

    def hide_labels(self) -> "UnlabeledTable":
        return UnlabeledTable(self.features, self.labels, self.class_count)


@dataclass(frozen=True, eq=False)
class UnlabeledTable:
    """Feature matrix whose labels, if known at all, are reachable only through an oracle."""

    features: np.ndarray
    hidden_labels: np.ndarray | None = None
    class_count: int | None = None

    def __post_init__(self):
        X = np.asarray(self.features, dtype=np.float64)
        if X.ndim != 2 or X.shape[0] < 1 or X.shape[1] < 1:
            raise ValueError(f"features must be a non-empty 2-D matrix, got shape {X.shape}")
        if not np.all(np.isfinite(X)):
            raise ValueError("features must be finite")
        object.__setattr__(self, "features", _frozen(X))
        if self.hidden_labels is not None:
            if self.class_count is None or int(self.class_count) < 2:
                raise ValueError("hidden labels require class_count >= 2")
            y = check_labels(self.hidden_labels, X.shape[0], int(self.class_count))
            object.__setattr__(self, "hidden_labels", _frozen(y))
            object.__setattr__(self, "class_count", int(self.class_count))

    @property
    def n_rows(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    def __len__(self) -> int:
        return self.n_rows

    def take(self, rows) -> "UnlabeledTable":
        rows = np.asarray(rows, dtype=np.int64)
        hidden = None if self.hidden_labels is None else self.hidden_labels[rows]
        return UnlabeledTable(self.features[rows], hidden, self.class_count)

    def reveal(self) -> LabeledTable:
        """The labeled view; used by evaluation code, never by the query loop."""
        if self.hidden_labels is None:
            raise ValueError("table has no hidden labels")
        return LabeledTable(self.features, self.hidden_labels, self.class_count)


@dataclass(frozen=True)
class SplitSpec:
    fraction: float = 0.5
    seed: int = 0


@dataclass(frozen=True)
class ShiftSpec:
    """Parameters of a synthetic source/target pair.

    ``marginal_shift`` translates every class mean of the target along every
    feature; ``posterior_shift`` is the fraction of the way from the source
    labelling rule to an uncorrelated one.
    """

    n_features: int = 2
    class_count: int = 2
    source_size: int = 600
    target_size: int = 1200
    marginal_shift: float = 0.0
    posterior_shift: float = 0.0
    noise: float = 0.12
    seed: int = 0

    def __post_init__(self):
        for name in ("n_features", "class_count", "source_size", "target_size"):
            if int(getattr(self, name)) < 1:
                raise ValueError(f"{name} must be positive")
        if self.n_features < 2:
            raise ValueError("n_features must be at least 2 (the class layout is planar)")
        if self.class_count < 2:
            raise ValueError("class_count must be at least 2")
        if self.marginal_shift < 0 or self.noise < 0:
            raise ValueError("marginal_shift and noise must be non-negative")
        if not 0.0 <= self.posterior_shift <= 1.0:
            raise ValueError("posterior_shift must lie in [0, 1]")


def load_csv(path, label_column: str = "label") -> LabeledTable:
    """Read a comma-separated table with a header row.

    Labels are encoded by lexicographic order of their raw strings.
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"no such file: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        if label_column not in header:
            raise ValueError(f"{path}: label column {label_column!r} not in header")
        label_idx = header.index(label_column)
        raw_labels, rows = [], []
        for lineno, record in enumerate(reader, start=2):
            if not record:
                continue
            if len(record) != len(header):
                raise ValueError(
                    f"{path}:{lineno}: ragged row ({len(record)} fields, header has {len(header)})"
                )
            values = []
            for j, cell in enumerate(record):
                if j == label_idx:
                    continue
                cell = cell.strip()
                if cell == "":
                    raise ValueError(f"{path}:{lineno}: missing value in column {header[j]!r}")
                try:
                    v = float(cell)
                except ValueError:
                    raise ValueError(
                        f"{path}:{lineno}: non-numeric value {cell!r} in column {header[j]!r}"
                    ) from None
                if not math.isfinite(v):
                    raise ValueError(f"{path}:{lineno}: non-finite value in column {header[j]!r}")
                values.append(v)
            raw = record[label_idx].strip()
            if raw == "":
                raise ValueError(f"{path}:{lineno}: missing label")
            raw_labels.append(raw)
            rows.append(values)
    if not rows:
        raise ValueError(f"{path}: no data rows")
    names = tuple(sorted(set(raw_labels)))
    if len(names) < 2:
        raise ValueError(f"{path}: degenerate classes (only {len(names)} distinct label)")
    code = {name: i for i, name in enumerate(names)}
    labels = np.array([code[s] for s in raw_labels], dtype=np.int64)
    return LabeledTable(np.array(rows, dtype=np.float64), labels, len(names), names)


def save_csv(table: LabeledTable | UnlabeledTable, path, label_column: str = "label") -> None:
    """Write a table in the format ``load_csv`` reads; unlabeled tables without labels get no label column."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    labels = table.labels if isinstance(table, LabeledTable) else table.hidden_labels
    names = getattr(table, "label_names", None)
    header = [f"x{j}" for j in range(table.n_features)]
    if labels is not None:
        header.append(label_column)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for i in range(table.n_rows):
            row = [repr(float(v)) for v in table.features[i]]
            if labels is not None:
                # zero-padded codes keep lexicographic order equal to numeric order
                lab = names[labels[i]] if names else f"c{labels[i]:03d}"
                row.append(lab)
            writer.writerow(row)


def split(table: LabeledTable, spec: SplitSpec) -> tuple[LabeledTable, LabeledTable]:
    """Random disjoint partition; the first part gets ``round(fraction * rows)`` rows."""
    check_fraction(spec.fraction, "fraction")
    n = table.n_rows
    n_first = int(round(spec.fraction * n))
    if n_first < 1 or n_first > n - 1:
        raise ValueError(f"fraction {spec.fraction} on {n} rows leaves an empty part")
    perm = derive_rng(spec.seed).permutation(n)
    return table.take(np.sort(perm[:n_first])), table.take(np.sort(perm[n_first:]))


def split_unlabeled(table: UnlabeledTable, spec: SplitSpec) -> tuple[UnlabeledTable, UnlabeledTable]:
    check_fraction(spec.fraction, "fraction")
    n = table.n_rows
    n_first = int(round(spec.fraction * n))
    if n_first < 1 or n_first > n - 1:
        raise ValueError(f"fraction {spec.fraction} on {n} rows leaves an empty part")
    perm = derive_rng(spec.seed).permutation(n)
    return table.take(np.sort(perm[:n_first])), table.take(np.sort(perm[n_first:]))


def bootstrap_rows(table: LabeledTable, sample_fraction: float, seed: int) -> np.ndarray:
    """Row indices of a class-complete sample drawn without replacement."""
    check_fraction(sample_fraction, "sample_fraction", closed_right=True)
    n = table.n_rows
    m = int(round(sample_fraction * n))
    if m < table.class_count:
        raise ValueError(
            f"a sample of {m} rows cannot contain all {table.class_count} classes"
        )
    for attempt in range(MAX_RESAMPLE_ATTEMPTS):
        rows = derive_rng(seed, attempt).choice(n, size=m, replace=False)
        if np.unique(table.labels[rows]).size == table.class_count:
            return rows
    raise ValueError(
        f"no class-complete sample of {m} rows after {MAX_RESAMPLE_ATTEMPTS} attempts"
    )


def bootstrap_sample(table: LabeledTable, sample_fraction: float = 0.8, seed: int = 0) -> LabeledTable:
    return table.take(bootstrap_rows(table, sample_fraction, seed))


def _layout(class_count: int) -> tuple[np.ndarray, np.ndarray]:
    """Cell centres of a checkerboard grid and the class of each cell.

    Cell (a, b) belongs to class ``(a + b) mod C``.  With two classes the
    3x3 board needs four separating lines, so no linear model is adequate.
    """
    g = max(3, class_count)
    a, b = np.meshgrid(np.arange(g), np.arange(g), indexing="ij")
    a, b = a.ravel(), b.ravel()
    centres = np.column_stack([a, b]).astype(np.float64) - (g - 1) / 2.0
    return centres, (a + b) % class_count


def _draw(rng, spec: ShiftSpec, size: int, centres, cell_labels, offset: float):
    n_cells = len(centres)
    # balanced cell counts, remainder spread at random
    counts = np.full(n_cells, size // n_cells)
    counts[rng.choice(n_cells, size - counts.sum(), replace=False)] += 1
    cells = rng.permutation(np.repeat(np.arange(n_cells), counts))
    X = np.empty((size, spec.n_features))
    X[:, :2] = centres[cells] + spec.noise * rng.standard_normal((size, 2))
    X[:, 2:] = rng.standard_normal((size, spec.n_features - 2))
    X += offset
    return X, cell_labels[cells]


def make_shifted_pair(spec: ShiftSpec) -> tuple[LabeledTable, UnlabeledTable]:
    """Draw a labeled source table and a target table with hidden labels.

    The target rule relabels ``round(posterior_shift * cells * (C-1)/C)``
    randomly chosen cells to the next class, so a full shift leaves a source
    model near chance.
    """
    C = spec.class_count
    if spec.source_size < 10 * C or spec.target_size < 10 * C:
        raise ValueError(f"source and target sizes must be at least {10 * C}")
    centres, cell_labels = _layout(C)
    source_rng = derive_rng(spec.seed, 0)
    target_rng = derive_rng(spec.seed, 1)
    Xs, ys = _draw(source_rng, spec, spec.source_size, centres, cell_labels, 0.0)

    target_labels = cell_labels.copy()
    n_moved = int(round(spec.posterior_shift * len(centres) * (C - 1) / C))
    moved = derive_rng(spec.seed, 2).choice(len(centres), n_moved, replace=False)
    target_labels[moved] = (target_labels[moved] + 1) % C
    Xt, yt = _draw(target_rng, spec, spec.target_size, centres, target_labels, spec.marginal_shift)
    return LabeledTable(Xs, ys, C), UnlabeledTable(Xt, yt, C)
