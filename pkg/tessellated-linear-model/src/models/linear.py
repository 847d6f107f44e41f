"""
Per-node learners: ridge least-squares regression and logistic classification
"""

import logging
from dataclasses import dataclass, field
from typing import Tuple

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve
from scipy.special import expit

from ..config import FitConfig
from ..errors import DataError, NumericError
from ..preprocessing.dataset import Dataset

logger = logging.getLogger(__name__)

# logit of a one-class node's constant classifier
ONE_CLASS_LOGIT = 30.0


def affine(features: np.ndarray, weights: np.ndarray, bias: float) -> np.ndarray:
    """Row-wise w . f + c; a row gives the same bits alone or inside a batch"""
    return np.sum(features * weights, axis=1) + bias


def _as_rows(f: np.ndarray, dim: int) -> np.ndarray:
    rows = np.asarray(f, dtype=np.float64)
    if rows.ndim == 1:
        rows = rows.reshape(1, -1)
    if rows.ndim != 2 or rows.shape[1] != dim:
        raise DataError(f"Expected feature dimension {dim}, got shape {np.shape(f)}")
    return rows


@dataclass(frozen=True, eq=False)
class LinearRegressor:
    """Cell model y_hat = r . f + b"""
    r: np.ndarray
    b: float

    @property
    def dim(self) -> int:
        return self.r.shape[0]

    def predict(self, features: np.ndarray) -> np.ndarray:
        return affine(_as_rows(features, self.dim), self.r, self.b)


@dataclass(frozen=True, eq=False)
class LinearClassifier:
    """Hyperplane w . f + c = 0; prob(f) = sigmoid(w . f + c) = P(y <= t)"""
    w: np.ndarray
    c: float
    loss_curve: Tuple[float, ...] = field(default=(), repr=False)

    @property
    def dim(self) -> int:
        return self.w.shape[0]

    def logits(self, features: np.ndarray) -> np.ndarray:
        return affine(_as_rows(features, self.dim), self.w, self.c)

    def prob_left(self, features: np.ndarray) -> np.ndarray:
        return expit(self.logits(features))

    def goes_left(self, features: np.ndarray) -> np.ndarray:
        # ties (w . f + c == 0) route left
        return self.logits(features) >= 0


def fit_regressor(data: Dataset, cfg: FitConfig) -> LinearRegressor:
    """
    Ridge least squares with an unpenalised bias

    Minimises sum (y - r . f - b)^2 + ridge_lambda * |r|^2 by solving the
    centred normal equations (Xc'Xc + lambda I) r = Xc'yc with a Cholesky
    factorisation, then b = mean(y) - mean(f) . r.
    """
    features, targets = data.features, data.targets
    mean_f = features.mean(axis=0)
    mean_y = float(targets.mean())
    centred = features - mean_f

    gram = centred.T @ centred
    gram[np.diag_indices_from(gram)] += cfg.ridge_lambda
    rhs = centred.T @ (targets - mean_y)

    hint = "use ridge_lambda > 0" if cfg.ridge_lambda == 0 else "rescale the features"
    singular = NumericError(
        f"Singular regression system (n={data.size}, d={data.dim}, "
        f"ridge_lambda={cfg.ridge_lambda}); {hint}"
    )
    try:
        factor = cho_factor(gram, lower=True, check_finite=False)
    except LinAlgError as e:
        raise singular from e
    # lambda > 0 keeps the system positive definite
    if cfg.ridge_lambda == 0:
        pivots = np.abs(np.diag(factor[0]))
        if pivots.min() <= 1e-8 * max(pivots.max(), 1e-300):
            raise singular
    r = cho_solve(factor, rhs, check_finite=False)

    if not np.all(np.isfinite(r)):
        raise NumericError("Regression produced non-finite coefficients")
    b = mean_y - float(mean_f @ r)
    return LinearRegressor(r=r, b=b)


def _logistic_loss(features, labels, w, c, l2) -> float:
    z = affine(features, w, c)
    # mean BCE = mean(log(1 + e^z) - y z)
    return float(np.mean(np.logaddexp(0.0, z) - labels * z) + l2 * (w @ w))


def _logistic_grad(features, labels, w, c, l2):
    residual = expit(affine(features, w, c)) - labels
    grad_w = features.T @ residual / labels.size + 2.0 * l2 * w
    grad_c = float(residual.mean())
    return grad_w, grad_c


def fit_classifier(features: np.ndarray, labels: np.ndarray, cfg: FitConfig) -> LinearClassifier:
    """
    Logistic regression by gradient descent with Armijo backtracking

    Args:
        features: n x d matrix
        labels: n binary labels (1 = left, y <= t)
        cfg: Fit settings (logit_l2, max_iters, tol, step)

    Returns:
        LinearClassifier: one-class inputs give w = 0 and c = +/-ONE_CLASS_LOGIT
    """
    features = np.asarray(features, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.float64).ravel()
    if features.ndim != 2 or features.shape[0] != labels.size:
        raise DataError(f"Classifier features {features.shape} do not match {labels.size} labels")
    if labels.size == 0:
        raise DataError("Cannot fit a classifier on zero rows")
    if not np.all((labels == 0) | (labels == 1)):
        raise DataError("Classifier labels must be 0 or 1")

    dim = features.shape[1]
    if np.all(labels == labels[0]):
        sign = 1.0 if labels[0] == 1 else -1.0
        logger.debug(f"One-class node ({labels.size} rows); constant classifier")
        return LinearClassifier(w=np.zeros(dim), c=sign * ONE_CLASS_LOGIT)

    w = np.zeros(dim)
    p = labels.mean()
    c = float(np.log(p / (1.0 - p)))
    l2 = cfg.logit_l2
    step = cfg.step
    loss = _logistic_loss(features, labels, w, c, l2)
    curve = [loss]

    for _ in range(cfg.max_iters):
        grad_w, grad_c = _logistic_grad(features, labels, w, c, l2)
        grad_sq = float(grad_w @ grad_w + grad_c * grad_c)
        if np.sqrt(grad_sq) < cfg.tol:
            break

        while True:
            w_new = w - step * grad_w
            c_new = c - step * grad_c
            loss_new = _logistic_loss(features, labels, w_new, c_new, l2)
            if loss_new <= loss - 0.5 * step * grad_sq:
                break
            step *= 0.5
            if step < 1e-12:
                break
        if step < 1e-12:
            break

        w, c, loss = w_new, c_new, loss_new
        curve.append(loss)
        step = min(step * 2.0, cfg.step * 1e12)

    if not (np.all(np.isfinite(w)) and np.isfinite(c)):
        raise NumericError("Logistic regression diverged")
    return LinearClassifier(w=w, c=float(c), loss_curve=tuple(curve))


def predict_regressor(model: LinearRegressor, f: np.ndarray) -> float:
    """Exact affine evaluation r . f + b for one feature vector"""
    f = np.asarray(f, dtype=np.float64)
    if f.ndim != 1:
        raise DataError(f"Expected a single feature vector, got shape {f.shape}")
    return float(model.predict(f)[0])


def classify(model: LinearClassifier, f: np.ndarray) -> Tuple[float, bool]:
    """Return (P(left), goes_left) for one feature vector; goes_left iff w . f + c >= 0"""
    f = np.asarray(f, dtype=np.float64)
    if f.ndim != 1:
        raise DataError(f"Expected a single feature vector, got shape {f.shape}")
    z = model.logits(f)[0]
    return float(expit(z)), bool(z >= 0)
