"""Single-hidden-layer network whose complexity is its hidden width."""

from __future__ import annotations

import json
import threading
from dataclasses import asdict, dataclass, replace
from pathlib import Path

import numpy as np
from scipy.special import expit, softmax
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_features, check_labels, derive_rng
from .dataset import LabeledTable

MODEL_FORMAT = "complexity-transfer/shallow-net"
MODEL_VERSION = 1


class TrainingDiverged(RuntimeError):
    def __init__(self, epoch: int, hidden_nodes: int | None = None):
        self.epoch = epoch
        self.hidden_nodes = hidden_nodes
        where = f" (hidden_nodes={hidden_nodes})" if hidden_nodes is not None else ""
        super().__init__(f"non-finite training loss at epoch {epoch}{where}")


class _Counter:
    """Process-wide count of completed fits, for cost accounting."""

    def __init__(self):
        self._n = 0
        self._lock = threading.Lock()

    def increment(self):
        with self._lock:
            self._n += 1

    @property
    def value(self) -> int:
        return self._n

    def reset(self):
        with self._lock:
            self._n = 0


training_counter = _Counter()


@dataclass(frozen=True)
class NetConfig:
    hidden_nodes: int = 4
    epochs: int = 200
    learning_rate: float = 0.05
    batch_size: int = 32
    seed: int = 0

    def __post_init__(self):
        if int(self.hidden_nodes) < 1:
            raise ValueError("hidden_nodes must be >= 1")
        if int(self.epochs) < 1 or int(self.batch_size) < 1:
            raise ValueError("epochs and batch_size must be positive")
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")

    def with_theta(self, theta: int, seed: int | None = None) -> "NetConfig":
        return replace(self, hidden_nodes=int(theta), seed=self.seed if seed is None else int(seed))


def _forward(params, X):
    W1, W2 = params
    H = expit(X @ W1[:-1] + W1[-1])
    Z = H @ W2[:-1] + W2[-1]
    return H, Z


def _loss_grad_into(params, X, Y, g1, g2) -> float:
    W1, W2 = params
    m = X.shape[0]
    H, Z = _forward(params, X)
    Z -= Z.max(axis=1, keepdims=True)
    E = np.exp(Z)
    S = E.sum(axis=1, keepdims=True)
    loss = (np.log(S).sum() - np.sum(Y * Z)) / m
    dZ = (E / S - Y) / m
    np.matmul(H.T, dZ, out=g2[:-1])
    g2[-1] = dZ.sum(axis=0)
    dA = (dZ @ W2[:-1].T) * H * (1.0 - H)
    np.matmul(X.T, dA, out=g1[:-1])
    g1[-1] = dA.sum(axis=0)
    return loss


def loss_and_grad(params, X, Y):
    """Mean cross-entropy of softmax outputs against one-hot ``Y`` and its gradient.

    ``params`` is ``(W1, W2)`` with the bias stored as the last row of each
    matrix, i.e. shapes ``(n+1, h)`` and ``(h+1, C)``.
    """
    g1, g2 = np.empty_like(params[0]), np.empty_like(params[1])
    loss = _loss_grad_into(params, np.asarray(X, dtype=np.float64), Y, g1, g2)
    return loss, (g1, g2)


class ShallowNetClassifier(ClassifierMixin, BaseEstimator):
    """Feed-forward classifier with one logistic hidden layer and a softmax output.

    Inputs are standardized with statistics from the rows passed to ``fit``.
    Training runs exactly ``epochs`` passes of shuffled mini-batch Adam on the
    mean cross-entropy; initialization and shuffling are drawn from streams
    derived from ``random_state``, so equal inputs give bit-identical weights.

    Parameters
    ----------
    hidden_nodes : int
        Hidden width, the complexity parameter.
    epochs, learning_rate, batch_size : training schedule.
    random_state : int
        Seed for initialization and mini-batch order.
    n_classes : int or None
        Output width. ``None`` means ``max(y) + 1`` (at least 2); pass it
        explicitly when a training subset may miss a class.
    """

    def __init__(
        self,
        hidden_nodes=4,
        epochs=200,
        learning_rate=0.05,
        batch_size=32,
        random_state=0,
        n_classes=None,
    ):
        self.hidden_nodes = hidden_nodes
        self.epochs = epochs
        self.learning_rate = learning_rate
        self.batch_size = batch_size
        self.random_state = random_state
        self.n_classes = n_classes

    @property
    def config(self) -> NetConfig:
        return NetConfig(
            int(self.hidden_nodes),
            int(self.epochs),
            float(self.learning_rate),
            int(self.batch_size),
            int(self.random_state),
        )

    def fit(self, X, y):
        cfg = self.config
        X = check_features(X)
        y = check_labels(y, X.shape[0], self.n_classes)
        C = int(self.n_classes) if self.n_classes is not None else max(2, int(y.max()) + 1)
        n, h = X.shape[1], cfg.hidden_nodes

        mean = X.mean(axis=0)
        scale = X.std(axis=0)
        scale[scale == 0.0] = 1.0
        Xs = (X - mean) / scale
        Y = np.eye(C)[y]

        init_rng = derive_rng(cfg.seed, 0)
        shuffle_rng = derive_rng(cfg.seed, 1)
        lim1 = np.sqrt(6.0 / (n + h))
        lim2 = np.sqrt(6.0 / (h + C))
        flat = np.empty((n + 1) * h + (h + 1) * C)
        W1 = flat[: (n + 1) * h].reshape(n + 1, h)
        W2 = flat[(n + 1) * h:].reshape(h + 1, C)
        W1[:-1] = init_rng.uniform(-lim1, lim1, (n, h))
        W1[-1] = 0.0
        W2[:-1] = init_rng.uniform(-lim2, lim2, (h, C))
        W2[-1] = 0.0
        params = (W1, W2)
        grad = np.empty_like(flat)
        g1 = grad[: (n + 1) * h].reshape(n + 1, h)
        g2 = grad[(n + 1) * h:].reshape(h + 1, C)

        beta1, beta2, eps = 0.9, 0.999, 1e-8
        m1 = np.zeros_like(flat)
        m2 = np.zeros_like(flat)
        step = 0
        rows = X.shape[0]
        bs = min(cfg.batch_size, rows)
        lr = cfg.learning_rate
        # overflow shows up as a non-finite epoch loss, reported below
        with np.errstate(over="ignore", invalid="ignore"):
            for epoch in range(1, cfg.epochs + 1):
                order = shuffle_rng.permutation(rows)
                total = 0.0
                for start in range(0, rows, bs):
                    idx = order[start:start + bs]
                    loss = _loss_grad_into(params, Xs[idx], Y[idx], g1, g2)
                    total += loss * idx.size
                    step += 1
                    m1 *= beta1
                    m1 += (1.0 - beta1) * grad
                    m2 *= beta2
                    m2 += (1.0 - beta2) * grad * grad
                    step_size = lr * np.sqrt(1.0 - beta2**step) / (1.0 - beta1**step)
                    flat -= step_size * m1 / (np.sqrt(m2) + eps)
                if not np.isfinite(total):
                    raise TrainingDiverged(epoch, h)

        W1, W2 = W1.copy(), W2.copy()
        self.coefs_ = (W1, W2)
        self.mean_ = mean
        self.scale_ = scale
        self.classes_ = np.arange(C)
        self.n_features_in_ = n
        self.loss_ = total / rows
        training_counter.increment()
        return self

    def predict_proba(self, X):
        check_is_fitted(self, "coefs_")
        X = check_features(X, self.n_features_in_)
        _, Z = _forward(self.coefs_, (X - self.mean_) / self.scale_)
        return softmax(Z, axis=1)

    def predict(self, X):
        # np.argmax returns the first maximum, i.e. ties go to the lowest class
        return np.argmax(self.predict_proba(X), axis=1)

    def margin(self, X):
        """Gap between the two largest class probabilities of each row."""
        P = np.sort(self.predict_proba(X), axis=1)
        return P[:, -1] - P[:, -2]

    def zero_one_error(self, X, y) -> float:
        y = check_labels(y, np.asarray(X).shape[0])
        return float(np.mean(self.predict(X) != y))

    def to_dict(self) -> dict:
        check_is_fitted(self, "coefs_")
        W1, W2 = self.coefs_
        return {
            "format": MODEL_FORMAT,
            "version": MODEL_VERSION,
            "config": asdict(self.config),
            "n_features": int(self.n_features_in_),
            "n_classes": int(self.classes_.size),
            "mean": self.mean_.tolist(),
            "scale": self.scale_.tolist(),
            "hidden_weights": W1.tolist(),
            "output_weights": W2.tolist(),
        }

    @classmethod
    def from_dict(cls, blob: dict) -> "ShallowNetClassifier":
        if blob.get("format") != MODEL_FORMAT:
            raise ValueError(f"not a model blob: format={blob.get('format')!r}")
        if blob.get("version") != MODEL_VERSION:
            raise ValueError(f"unsupported model version {blob.get('version')!r}")
        cfg = blob["config"]
        model = cls(
            hidden_nodes=cfg["hidden_nodes"],
            epochs=cfg["epochs"],
            learning_rate=cfg["learning_rate"],
            batch_size=cfg["batch_size"],
            random_state=cfg["seed"],
            n_classes=blob["n_classes"],
        )
        model.coefs_ = (
            np.array(blob["hidden_weights"], dtype=np.float64),
            np.array(blob["output_weights"], dtype=np.float64),
        )
        model.mean_ = np.array(blob["mean"], dtype=np.float64)
        model.scale_ = np.array(blob["scale"], dtype=np.float64)
        model.classes_ = np.arange(blob["n_classes"])
        model.n_features_in_ = blob["n_features"]
        return model


TrainedModel = ShallowNetClassifier


def train(data: LabeledTable, config: NetConfig) -> ShallowNetClassifier:
    model = ShallowNetClassifier(
        hidden_nodes=config.hidden_nodes,
        epochs=config.epochs,
        learning_rate=config.learning_rate,
        batch_size=config.batch_size,
        random_state=config.seed,
        n_classes=data.class_count,
    )
    return model.fit(data.features, data.labels)


def predict_proba(model: ShallowNetClassifier, features) -> np.ndarray:
    return model.predict_proba(features)


def zero_one_error(model: ShallowNetClassifier, data: LabeledTable) -> float:
    return model.zero_one_error(data.features, data.labels)


def margin(model: ShallowNetClassifier, features) -> np.ndarray:
    return model.margin(features)


def save_model(model: ShallowNetClassifier, path) -> None:
    Path(path).write_text(json.dumps(model.to_dict()), encoding="utf-8")


def load_model(path) -> ShallowNetClassifier:
    return ShallowNetClassifier.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
