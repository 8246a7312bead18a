"""Gaussian prior over hidden width, learned from bootstrap sweeps of a source table."""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import check_fraction, derive_seed
from .dataset import LabeledTable, SplitSpec, bootstrap_rows, split
from .learner import NetConfig, TrainingDiverged, train, zero_one_error

SIGMA_FLOOR = 1.0


@dataclass(frozen=True)
class PriorConfig:
    k: int = 100
    theta_grid: tuple[int, ...] = tuple(range(2, 51))
    sample_fraction: float = 0.8
    validation_fraction: float = 0.3
    net_template: NetConfig = field(default_factory=NetConfig)
    seed: int = 0

    def __post_init__(self):
        grid = tuple(int(t) for t in self.theta_grid)
        if len(grid) < 2 or list(grid) != sorted(set(grid)) or grid[0] < 1:
            raise ValueError("theta_grid must be >= 2 distinct positive integers in ascending order")
        object.__setattr__(self, "theta_grid", grid)
        if self.k < 1:
            raise ValueError("k must be positive")
        check_fraction(self.sample_fraction, "sample_fraction", closed_right=True)
        check_fraction(self.validation_fraction, "validation_fraction")

    @property
    def grid_bounds(self) -> tuple[int, int]:
        return self.theta_grid[0], self.theta_grid[-1]

    def to_dict(self) -> dict:
        d = asdict(self)
        d["theta_grid"] = list(self.theta_grid)
        return d


@dataclass(frozen=True)
class ComplexityPrior:
    mu: float
    sigma: float
    optima: tuple[int, ...] = ()
    fingerprint: str = ""

    def __post_init__(self):
        if not (math.isfinite(self.mu) and self.sigma > 0 and math.isfinite(self.sigma)):
            raise ValueError(f"invalid prior (mu={self.mu}, sigma={self.sigma})")
        object.__setattr__(self, "optima", tuple(int(t) for t in self.optima))

    def density(self, theta) -> np.ndarray | float:
        z = (np.asarray(theta, dtype=np.float64) - self.mu) / self.sigma
        return np.exp(-0.5 * z * z) / (self.sigma * math.sqrt(2.0 * math.pi))

    @property
    def mean_theta(self) -> int:
        """Prior mean rounded to a usable width (halves round up)."""
        return max(1, int(math.floor(self.mu + 0.5)))

    def to_json(self) -> str:
        return json.dumps(
            {"mu": self.mu, "sigma": self.sigma, "optima": list(self.optima), "fingerprint": self.fingerprint},
            indent=2,
        )

    @classmethod
    def from_json(cls, text: str) -> "ComplexityPrior":
        blob = json.loads(text)
        return cls(float(blob["mu"]), float(blob["sigma"]), tuple(blob.get("optima", ())), blob.get("fingerprint", ""))

    def save(self, path) -> None:
        Path(path).write_text(self.to_json(), encoding="utf-8")

    @classmethod
    def load(cls, path) -> "ComplexityPrior":
        return cls.from_json(Path(path).read_text(encoding="utf-8"))


def fingerprint(source: LabeledTable, config: PriorConfig) -> str:
    h = hashlib.sha256()
    h.update(json.dumps(config.to_dict(), sort_keys=True).encode())
    h.update(np.ascontiguousarray(source.features).tobytes())
    h.update(np.ascontiguousarray(source.labels).tobytes())
    return h.hexdigest()[:16]


def select_width(grid, errors) -> int:
    """Grid width with the lowest validation error; ties go to the smaller width."""
    errors = np.asarray(errors, dtype=np.float64)
    if len(grid) != errors.size or errors.size == 0:
        raise ValueError("grid and errors must be non-empty and of equal length")
    order = np.argsort(grid, kind="stable")
    best = order[np.argmin(errors[order])]
    return int(grid[best])


def sweep_sample(sample: LabeledTable, config: PriorConfig, sample_seed: int) -> int:
    """Best hidden width for one bootstrap sample, judged on a held-out split."""
    train_part, valid_part = split(
        sample, SplitSpec(1.0 - config.validation_fraction, derive_seed(sample_seed, 0))
    )
    errors = []
    for theta in config.theta_grid:
        net = config.net_template.with_theta(theta, derive_seed(sample_seed, 1, theta))
        try:
            model = train(train_part, net)
        except TrainingDiverged as exc:
            raise TrainingDiverged(exc.epoch, theta) from exc
        errors.append(zero_one_error(model, valid_part))
    return select_width(config.theta_grid, errors)


def fit_gaussian(optima, fp: str = "") -> ComplexityPrior:
    """Maximum-likelihood Gaussian with the spread floored at one width unit."""
    values = np.asarray(optima, dtype=np.float64)
    if values.size == 0:
        raise ValueError("no optima to fit")
    mu = float(values.mean())
    sigma = float(np.sqrt(np.mean((values - mu) ** 2)))
    return ComplexityPrior(mu, max(sigma, SIGMA_FLOOR), tuple(int(v) for v in values), fp)


def estimate_prior(source: LabeledTable, config: PriorConfig, n_jobs: int | None = None) -> ComplexityPrior:
    """Sweep ``config.theta_grid`` on ``config.k`` bootstrap samples and fit a Gaussian.

    Each sample draws its rows and training seeds from ``(config.seed, i)``, so
    results do not depend on ``n_jobs``.
    """
    if config.k < 2:
        raise ValueError("k must be at least 2 to fit a spread")

    def one(i):
        sample_seed = derive_seed(config.seed, i)
        rows = bootstrap_rows(source, config.sample_fraction, derive_seed(sample_seed, 2))
        return sweep_sample(source.take(rows), config, sample_seed)

    if n_jobs in (None, 1):
        optima = [one(i) for i in range(config.k)]
    else:
        from joblib import Parallel, delayed

        optima = Parallel(n_jobs=n_jobs)(delayed(one)(i) for i in range(config.k))
    return fit_gaussian(optima, fingerprint(source, config))


def search_interval(prior: ComplexityPrior, grid_bounds: tuple[int, int]) -> tuple[int, int]:
    """Integer widths covering ``[mu - sigma, mu + sigma]``, clamped to the grid."""
    lo, hi = int(grid_bounds[0]), int(grid_bounds[1])
    if lo > hi:
        raise ValueError("grid_bounds must satisfy lo <= hi")
    t_min = max(lo, int(math.floor(prior.mu - prior.sigma)))
    t_max = min(hi, int(math.ceil(prior.mu + prior.sigma)))
    # a prior centred outside the grid still yields the nearest grid point
    t_min = min(t_min, hi)
    t_max = max(t_max, lo)
    return t_min, t_max


class ComplexityPriorEstimator(BaseEstimator):
    """Estimator wrapper around :func:`estimate_prior`.

    After ``fit(X, y)`` the fitted prior is in ``prior_`` and its parameters in
    ``mu_``, ``sigma_`` and ``optima_``.
    """

    def __init__(
        self,
        k=100,
        theta_min=2,
        theta_max=50,
        sample_fraction=0.8,
        validation_fraction=0.3,
        epochs=200,
        learning_rate=0.05,
        batch_size=32,
        random_state=0,
        n_jobs=None,
    ):
        self.k = k
        self.theta_min = theta_min
        self.theta_max = theta_max
        self.sample_fraction = sample_fraction
        self.validation_fraction = validation_fraction
        self.epochs = epochs
        self.learning_rate = learning_rate
        self.batch_size = batch_size
        self.random_state = random_state
        self.n_jobs = n_jobs

    def _config(self) -> PriorConfig:
        return PriorConfig(
            k=self.k,
            theta_grid=tuple(range(self.theta_min, self.theta_max + 1)),
            sample_fraction=self.sample_fraction,
            validation_fraction=self.validation_fraction,
            net_template=NetConfig(1, self.epochs, self.learning_rate, self.batch_size, self.random_state),
            seed=self.random_state,
        )

    def fit(self, X, y, n_classes=None):
        y = np.asarray(y)
        C = n_classes if n_classes is not None else max(2, int(y.max()) + 1)
        table = LabeledTable(X, y, C)
        self.prior_ = estimate_prior(table, self._config(), n_jobs=self.n_jobs)
        self.mu_ = self.prior_.mu
        self.sigma_ = self.prior_.sigma
        self.optima_ = np.array(self.prior_.optima)
        return self

    def search_interval(self) -> tuple[int, int]:
        check_is_fitted(self, "prior_")
        return search_interval(self.prior_, (self.theta_min, self.theta_max))
