"""MAP choice of hidden width on a labeled target set, and the resulting classifier."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_features, check_labels, derive_seed
from .capacity import CapacityParams, capacity_report
from .dataset import LabeledTable
from .learner import NetConfig, ShallowNetClassifier, TrainingDiverged, train, zero_one_error
from .prior import ComplexityPrior, search_interval

POSTERIOR_COLUMNS = (
    "theta",
    "empirical_error",
    "lambda",
    "likelihood",
    "prior_density",
    "unnormalized_posterior",
    "failed",
)


def likelihood(empirical_error, lam):
    """Exponential likelihood ``lam * exp(-lam * error)`` of a labeled set."""
    return lam * np.exp(-lam * empirical_error)


@dataclass
class PosteriorRow:
    theta: int
    empirical_error: float
    lam: float
    likelihood: float
    prior_density: float
    unnormalized_posterior: float
    failed: bool = False


@dataclass
class AdaptationResult:
    table: list[PosteriorRow]
    theta_star: int
    final_model: ShallowNetClassifier
    labeled_pool_size: int
    prior_fingerprint: str = ""
    interval: tuple[int, int] = (0, 0)

    def summary(self) -> dict:
        return {
            "theta_star": self.theta_star,
            "labeled_pool_size": self.labeled_pool_size,
            "search_interval": list(self.interval),
            "prior_fingerprint": self.prior_fingerprint,
            "failed_thetas": [r.theta for r in self.table if r.failed],
        }

    def write_posterior_csv(self, path) -> None:
        write_posterior_csv(self.table, path)

    def write_summary_json(self, path) -> None:
        Path(path).write_text(json.dumps(self.summary(), indent=2), encoding="utf-8")


def write_posterior_csv(rows, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(POSTERIOR_COLUMNS)
        for r in rows:
            writer.writerow([
                r.theta,
                repr(r.empirical_error),
                repr(r.lam),
                repr(r.likelihood),
                repr(r.prior_density),
                repr(r.unnormalized_posterior),
                int(r.failed),
            ])


def argmax_theta(thetas, scores) -> int:
    """Width with the highest score; ties go to the smaller width.  NaN scores never win."""
    thetas = np.asarray(thetas)
    scores = np.asarray(scores, dtype=np.float64)
    ok = ~np.isnan(scores)
    if not ok.any():
        raise ValueError("no finite posterior values")
    order = np.argsort(thetas, kind="stable")
    order = order[ok[order]]
    return int(thetas[order[np.argmax(scores[order])]])


def posterior_row(theta, empirical_error, lam, prior_density) -> PosteriorRow:
    lik = float(likelihood(empirical_error, lam))
    return PosteriorRow(int(theta), float(empirical_error), float(lam), lik, float(prior_density), lik * float(prior_density))


def run_map_adaptation(
    prior: ComplexityPrior,
    labeled: LabeledTable,
    params: CapacityParams,
    net_template: NetConfig,
    grid_bounds: tuple[int, int] = (2, 50),
) -> AdaptationResult:
    """Score every width in the prior's search interval on ``labeled`` and keep the MAP one.

    Each width is trained on ``labeled`` with a seed derived from
    ``(net_template.seed, theta)``; its in-sample zero-one error and capacity
    rate give the likelihood.  Training is deterministic, so the model fitted
    for the winning width is the final model and no extra fit is needed.
    """
    if np.unique(labeled.labels).size < 2:
        raise ValueError("labeled set must contain at least two classes")
    if params.n_examples != labeled.n_rows:
        raise ValueError(f"params.n_examples={params.n_examples} but |D|={labeled.n_rows}")
    t_min, t_max = search_interval(prior, grid_bounds)
    rows: list[PosteriorRow] = []
    models: dict[int, ShallowNetClassifier] = {}
    for theta in range(t_min, t_max + 1):
        cfg = net_template.with_theta(theta, derive_seed(net_template.seed, theta))
        rep = capacity_report(params, theta)
        density = float(prior.density(theta))
        try:
            model = train(labeled, cfg)
        except TrainingDiverged:
            rows.append(PosteriorRow(theta, math.nan, rep.lam, math.nan, density, math.nan, failed=True))
            continue
        models[theta] = model
        rows.append(posterior_row(theta, zero_one_error(model, labeled), rep.lam, density))
    if not models:
        raise RuntimeError(f"training diverged for every width in [{t_min}, {t_max}]")
    theta_star = argmax_theta([r.theta for r in rows], [r.unnormalized_posterior for r in rows])
    return AdaptationResult(rows, theta_star, models[theta_star], labeled.n_rows, prior.fingerprint, (t_min, t_max))


def evaluate(result: AdaptationResult, test: LabeledTable) -> float:
    """Accuracy of the final model on ``test``."""
    return 1.0 - zero_one_error(result.final_model, test)


class MAPComplexityClassifier(ClassifierMixin, BaseEstimator):
    """Classifier whose hidden width is the MAP estimate under a transferred prior.

    ``fit(X, y)`` treats ``(X, y)`` as the labeled target set, sets
    ``theta_star_``, ``posterior_`` and ``model_``, and predicts with the
    width-``theta_star_`` network.
    """

    def __init__(
        self,
        prior=None,
        alpha=1.0,
        delta=0.05,
        theta_min=2,
        theta_max=50,
        epochs=200,
        learning_rate=0.05,
        batch_size=32,
        random_state=0,
        n_classes=None,
    ):
        self.prior = prior
        self.alpha = alpha
        self.delta = delta
        self.theta_min = theta_min
        self.theta_max = theta_max
        self.epochs = epochs
        self.learning_rate = learning_rate
        self.batch_size = batch_size
        self.random_state = random_state
        self.n_classes = n_classes

    def fit(self, X, y):
        if self.prior is None:
            raise ValueError("a ComplexityPrior is required")
        X = check_features(X)
        y = check_labels(y, X.shape[0], self.n_classes)
        C = int(self.n_classes) if self.n_classes is not None else max(2, int(y.max()) + 1)
        data = LabeledTable(X, y, C)
        params = CapacityParams(X.shape[1], C, self.alpha, self.delta, X.shape[0])
        template = NetConfig(1, self.epochs, self.learning_rate, self.batch_size, self.random_state)
        result = run_map_adaptation(self.prior, data, params, template, (self.theta_min, self.theta_max))
        self.result_ = result
        self.theta_star_ = result.theta_star
        self.posterior_ = result.table
        self.model_ = result.final_model
        self.classes_ = np.arange(C)
        self.n_features_in_ = X.shape[1]
        return self

    def predict_proba(self, X):
        check_is_fitted(self, "model_")
        return self.model_.predict_proba(X)

    def predict(self, X):
        check_is_fitted(self, "model_")
        return self.model_.predict(X)
