"""
Reference models for the comparison table: mean predictor, plain linear
regression, k-means with per-cluster regression, and an MLP regressor
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.spatial.distance import cdist

from ..config import FitConfig, RunConfig, TrainConfig
from ..errors import DataError, NumericError
from ..preprocessing.dataset import Dataset
from ..utils.metrics import compute_metrics
from .layers import Dense, relu, relu_backward
from .linear import LinearRegressor, fit_regressor
from .tlm_model import train_model

logger = logging.getLogger(__name__)

KMEANS_MAX_ITERS = 100


@dataclass(frozen=True)
class MeanPredictor:
    mean: float

    def predict(self, features: np.ndarray) -> np.ndarray:
        return np.full(np.atleast_2d(features).shape[0], self.mean)


def fit_mean(data: Dataset) -> MeanPredictor:
    """Common-sense baseline: always predict the training mean"""
    if data.size < 1:
        raise DataError("Cannot fit the mean predictor on empty data")
    return MeanPredictor(float(np.mean(data.targets)))


# ---------------------------------------------------------------------------
# k-means + per-cluster linear regression
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class KMeansLR:
    k: int
    centroids: np.ndarray
    regressors: Tuple[LinearRegressor, ...]
    n_iter: int = 0

    def assign(self, features: np.ndarray) -> np.ndarray:
        """Index of the nearest centroid (Euclidean), first on ties"""
        return np.argmin(cdist(np.atleast_2d(features), self.centroids, "sqeuclidean"), axis=1)

    def predict(self, features: np.ndarray) -> np.ndarray:
        features = np.atleast_2d(np.asarray(features, dtype=np.float64))
        if features.shape[1] != self.centroids.shape[1]:
            raise DataError(f"KMeansLR expects {self.centroids.shape[1]} features, got {features.shape[1]}")
        labels = self.assign(features)
        predictions = np.empty(features.shape[0])
        for j in np.unique(labels):
            rows = labels == j
            predictions[rows] = self.regressors[j].predict(features[rows])
        return predictions


def _kmeans_plus_plus(features: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = features.shape[0]
    centroids = [features[rng.integers(n)]]
    closest = cdist(features, centroids[0][None, :], "sqeuclidean").ravel()
    for _ in range(1, k):
        total = closest.sum()
        # all points coincide with a centroid: fall back to a uniform draw
        index = rng.choice(n, p=closest / total) if total > 0 else rng.integers(n)
        centroids.append(features[index])
        closest = np.minimum(closest, cdist(features, features[index][None, :], "sqeuclidean").ravel())
    return np.array(centroids)


def fit_kmeans_lr(data: Dataset, k: int, seed: int, cfg: FitConfig) -> KMeansLR:
    """
    Lloyd's iterations from k-means++ seeding, then one ridge regressor per cluster

    Args:
        data: Training rows (n >= k)
        k: Number of clusters
        seed: RNG seed for the seeding draws
        cfg: Regressor fit settings

    Returns:
        KMeansLR
    """
    if k < 1:
        raise DataError(f"k must be >= 1, got {k}")
    if k > data.size:
        raise DataError(f"k={k} exceeds the number of rows ({data.size})")

    X = data.features
    rng = np.random.default_rng(seed)
    centroids = _kmeans_plus_plus(X, k, rng)
    labels = None

    n_iter = 0
    for n_iter in range(1, KMEANS_MAX_ITERS + 1):
        distances = cdist(X, centroids, "sqeuclidean")
        new_labels = np.argmin(distances, axis=1)
        if labels is not None and np.array_equal(new_labels, labels):
            break
        labels = new_labels

        own_distance = distances[np.arange(X.shape[0]), labels]
        for j in range(k):
            members = labels == j
            if members.any():
                centroids[j] = X[members].mean(axis=0)
            else:
                far = int(np.argmax(own_distance))
                logger.debug(f"k-means cluster {j} empty; re-seeded at row {far}")
                centroids[j] = X[far]
                own_distance[far] = 0.0

    # membership must match what predict assigns with the final centroids
    labels = np.argmin(cdist(X, centroids, "sqeuclidean"), axis=1)

    # rows nearest an empty cluster's centroid fall back on the global regressor
    fallback = None
    regressors = []
    for j in range(k):
        members = labels == j
        if members.any():
            regressors.append(fit_regressor(data.subset(members), cfg))
        else:
            if fallback is None:
                fallback = fit_regressor(data, cfg)
            regressors.append(fallback)

    logger.info(f"k-means with k={k} converged in {n_iter} iterations")
    return KMeansLR(k=k, centroids=centroids, regressors=tuple(regressors), n_iter=n_iter)


# ---------------------------------------------------------------------------
# MLP regressor
# ---------------------------------------------------------------------------

@dataclass(eq=False)
class MlpRegressor:
    """ReLU hidden layers and a linear scalar output, on standardised inputs and targets"""
    layers: List[Dense]
    x_mean: np.ndarray
    x_scale: np.ndarray
    y_mean: float
    y_scale: float
    loss_curve: List[float] = field(default_factory=list)

    def parameters(self) -> List[np.ndarray]:
        params = []
        for layer in self.layers:
            params.extend([layer.weight, layer.bias])
        return params

    def standardise(self, features: np.ndarray) -> np.ndarray:
        return (np.atleast_2d(features) - self.x_mean) / self.x_scale

    def forward(self, x: np.ndarray) -> Tuple[np.ndarray, list]:
        """Standardised-scale output for standardised inputs, plus the backward cache"""
        cache = []
        h = x
        for layer in self.layers[:-1]:
            z = layer.forward(h)
            cache.append((h, z))
            h = relu(z)
        cache.append((h, None))
        return self.layers[-1].forward(h).ravel(), cache

    def predict(self, features: np.ndarray) -> np.ndarray:
        features = np.asarray(features, dtype=np.float64)
        out, _ = self.forward(self.standardise(features))
        return out * self.y_scale + self.y_mean


def _scale(values: np.ndarray) -> np.ndarray:
    std = values.std(axis=0)
    return np.where(std > 1e-12, std, 1.0)


def init_mlp(data: Dataset, hidden: Sequence[int], seed: int) -> MlpRegressor:
    """He-normal hidden layers; the output layer starts at zero (predicts the mean)"""
    rng = np.random.default_rng(seed)
    sizes = [data.dim] + list(hidden)
    layers = [Dense.initialise(d_in, d_out, np.sqrt(2.0 / d_in), rng) for d_in, d_out in zip(sizes[:-1], sizes[1:])]
    layers.append(Dense(np.zeros((sizes[-1], 1)), np.zeros(1)))
    return MlpRegressor(
        layers=layers,
        x_mean=data.features.mean(axis=0),
        x_scale=_scale(data.features),
        y_mean=float(data.targets.mean()),
        y_scale=float(_scale(data.targets)),
    )


def _standardised_targets(model: MlpRegressor, data: Dataset) -> np.ndarray:
    return (data.targets - model.y_mean) / model.y_scale


def mlp_loss(model: MlpRegressor, data: Dataset) -> float:
    """Mean squared error on the standardised target scale"""
    out, _ = model.forward(model.standardise(data.features))
    residual = out - _standardised_targets(model, data)
    return float(np.mean(residual ** 2))


def mlp_gradient(model: MlpRegressor, data: Dataset) -> List[np.ndarray]:
    """Gradient of mlp_loss, laid out like model.parameters()"""
    out, cache = model.forward(model.standardise(data.features))
    g = (2.0 / data.size) * (out - _standardised_targets(model, data))[:, None]

    grads: List[np.ndarray] = [None] * (2 * len(model.layers))
    for index in reversed(range(len(model.layers))):
        h, _ = cache[index]
        g_in, g_w, g_b = model.layers[index].backward(h, g)
        grads[2 * index], grads[2 * index + 1] = g_w, g_b
        if index > 0:
            g = relu_backward(cache[index - 1][1], g_in)
    return grads


def fit_mlp(data: Dataset, cfg: TrainConfig, hidden: Sequence[int] = (128, 128)) -> MlpRegressor:
    """
    Minibatch gradient descent on MSE

    Args:
        data: Training rows
        cfg: learning_rate, epochs, batch_size, seed
        hidden: Hidden layer widths; () gives iterative linear regression

    Returns:
        MlpRegressor with its per-epoch loss curve
    """
    if data.size < 1:
        raise DataError("Cannot fit an MLP on empty data")
    if any(width < 1 for width in hidden):
        raise DataError(f"Hidden layer widths must be >= 1, got {list(hidden)}")

    model = init_mlp(data, hidden, cfg.seed)
    rng = np.random.default_rng(cfg.seed)
    curve = [mlp_loss(model, data)]

    for epoch in range(1, cfg.epochs + 1):
        order = rng.permutation(data.size)
        for start in range(0, data.size, cfg.batch_size):
            batch = data.subset(order[start:start + cfg.batch_size])
            for param, grad in zip(model.parameters(), mlp_gradient(model, batch)):
                param -= cfg.learning_rate * grad
        loss = mlp_loss(model, data)
        if not np.isfinite(loss):
            raise NumericError(f"MLP training diverged at epoch {epoch} (loss {loss})")
        curve.append(loss)

    model.loss_curve = curve
    logger.info(f"MLP {list(hidden)} trained for {cfg.epochs} epochs: loss {curve[0]:.6g} -> {curve[-1]:.6g}")
    return model


# ---------------------------------------------------------------------------
# Comparison table
# ---------------------------------------------------------------------------

def _row(name: str, predict, train: Dataset, test: Optional[Dataset]) -> Dict:
    row = {"model": name, "train": compute_metrics(predict(train), train.targets).to_dict()}
    if test is not None:
        row["test"] = compute_metrics(predict(test), test.targets).to_dict()
    return row


def run_comparison(train: Dataset, test: Optional[Dataset], cfg: RunConfig) -> List[Dict]:
    """
    Fit every baseline and the TLM on `train` and score them on both splits

    Returns:
        List of rows {"model", "train": metrics, "test": metrics}
    """
    fit_cfg = cfg.fit_config()
    train_cfg = cfg.train_config()

    mean = fit_mean(train)
    linear = fit_regressor(train, fit_cfg)
    kmeans = fit_kmeans_lr(train, min(cfg.kmeans_k, train.size), cfg.seed, fit_cfg)
    mlp = fit_mlp(train, train_cfg, cfg.mlp_layers)

    rows = [
        _row("common_sense", lambda d: mean.predict(d.features), train, test),
        _row("linear_regression", lambda d: linear.predict(d.features), train, test),
        _row("kmeans_lr", lambda d: kmeans.predict(d.features), train, test),
        _row("mlp", lambda d: mlp.predict(d.features), train, test),
    ]

    plain, _ = train_model(train, cfg.model_copy(update={"feature_opt": False}))
    for mode in ("hard", "soft", "oracle"):
        rows.append(_row(
            f"tlm_{mode}",
            lambda d, m=mode: plain.predict(d, m, cfg.soft_strategy).predictions,
            train,
            test,
        ))

    if cfg.feature_opt:
        optimised, _ = train_model(train, cfg)
        rows.append(_row("tlm_feature_opt", lambda d: optimised.predict(d, "hard").predictions, train, test))

    for row in rows:
        test_mae = row["test"]["mae"] if "test" in row else float("nan")
        logger.info(f"{row['model']:>18}: train MAE {row['train']['mae']:.4f}, test MAE {test_mae:.4f}")
    return rows
