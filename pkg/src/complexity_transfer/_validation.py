"""Input validation helpers shared by the estimators and table types."""

from __future__ import annotations

import numpy as np
from sklearn.utils.validation import check_array


def check_features(X, n_features: int | None = None) -> np.ndarray:
    """Return ``X`` as a finite 2-D float64 array, checking its width if asked."""
    X = check_array(X, dtype=np.float64, ensure_all_finite=True)
    if n_features is not None and X.shape[1] != n_features:
        raise ValueError(
            f"X has {X.shape[1]} features, but the model was fit with {n_features}"
        )
    return X


def check_labels(y, n_rows: int, n_classes: int | None = None) -> np.ndarray:
    y = np.asarray(y)
    if y.ndim != 1 or y.shape[0] != n_rows:
        raise ValueError(f"labels must be 1-D with {n_rows} entries, got shape {y.shape}")
    if y.size and not np.issubdtype(y.dtype, np.integer):
        if not np.all(np.equal(np.mod(y, 1), 0)):
            raise ValueError("labels must be integer class indices")
    y = y.astype(np.int64)
    if y.size and y.min() < 0:
        raise ValueError("labels must be non-negative class indices")
    if n_classes is not None and y.size and y.max() >= n_classes:
        raise ValueError(f"label {y.max()} out of range for {n_classes} classes")
    return y


def check_fraction(value: float, name: str, *, closed_right: bool = False) -> float:
    value = float(value)
    upper_ok = value <= 1.0 if closed_right else value < 1.0
    if not (value > 0.0 and upper_ok):
        bound = "(0, 1]" if closed_right else "(0, 1)"
        raise ValueError(f"{name} must lie in {bound}, got {value}")
    return value


def derive_rng(seed: int, *keys: int) -> np.random.Generator:
    """Independent generator for the stream identified by ``(seed, *keys)``."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), *map(int, keys)]))


def derive_seed(seed: int, *keys: int) -> int:
    return int(np.random.SeedSequence([int(seed), *map(int, keys)]).generate_state(1, np.uint64)[0])
