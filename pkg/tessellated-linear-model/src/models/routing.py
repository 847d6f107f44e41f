"""
Inference over a trained tree: hard, soft and oracle (label) routing

The batch routers work on whole feature matrices; the per-vector functions are
thin wrappers, so a row predicts the same bits alone or inside a batch.
"""

import logging
from dataclasses import dataclass
from typing import Dict, Literal, Optional, Tuple

import numpy as np
from scipy.special import expit

from ..errors import DataError
from ..preprocessing.dataset import Dataset
from ..utils.metrics import Metrics, compute_metrics
from .tree import TlmTree

logger = logging.getLogger(__name__)

RoutingMode = Literal["hard", "soft", "oracle"]
ROUTING_MODES = ("hard", "soft", "oracle")
SOFT_STRATEGIES = ("path", "full", "leaves")


@dataclass(frozen=True, eq=False)
class BatchPrediction:
    predictions: np.ndarray
    leaf_ids: np.ndarray
    metrics: Optional[Metrics] = None
    per_leaf: Optional[Dict[int, Metrics]] = None


def _check_rows(tree: TlmTree, features) -> np.ndarray:
    rows = np.asarray(features, dtype=np.float64)
    if rows.ndim == 1:
        rows = rows.reshape(1, -1)
    if rows.ndim != 2 or rows.shape[1] != tree.dim:
        raise DataError(f"Tree expects {tree.dim} features, got shape {np.shape(features)}")
    return rows


def _check_vector(tree: TlmTree, f) -> np.ndarray:
    f = np.asarray(f, dtype=np.float64)
    if f.ndim != 1 or f.shape[0] != tree.dim:
        raise DataError(f"Tree expects a feature vector of length {tree.dim}, got shape {f.shape}")
    return f


def route_hard(tree: TlmTree, features) -> Tuple[np.ndarray, np.ndarray]:
    """
    Follow each classifier's decision down to a leaf

    Returns:
        Tuple of (predictions, leaf ids)
    """
    X = _check_rows(tree, features)
    predictions = np.empty(X.shape[0])
    leaf_ids = np.empty(X.shape[0], dtype=np.int64)

    stack = [(tree.root, np.arange(X.shape[0]))]
    while stack:
        node, rows = stack.pop()
        if rows.size == 0:
            continue
        if node.is_leaf:
            leaf_ids[rows] = node.node_id
            predictions[rows] = node.regressor.predict(X[rows])
            continue
        left = node.classifier.goes_left(X[rows])
        stack.append((node.left, rows[left]))
        stack.append((node.right, rows[~left]))
    return predictions, leaf_ids


def route_oracle(tree: TlmTree, features, targets) -> Tuple[np.ndarray, np.ndarray]:
    """Route by the label rule y <= threshold at every internal node"""
    X = _check_rows(tree, features)
    y = np.asarray(targets, dtype=np.float64).ravel()
    if y.shape[0] != X.shape[0]:
        raise DataError(f"Oracle routing needs one target per row: {X.shape[0]} rows, {y.shape[0]} targets")
    if not np.all(np.isfinite(y)):
        raise DataError("Oracle routing needs finite targets")

    predictions = np.empty(X.shape[0])
    leaf_ids = np.empty(X.shape[0], dtype=np.int64)
    stack = [(tree.root, np.arange(X.shape[0]))]
    while stack:
        node, rows = stack.pop()
        if rows.size == 0:
            continue
        if node.is_leaf:
            leaf_ids[rows] = node.node_id
            predictions[rows] = node.regressor.predict(X[rows])
            continue
        left = y[rows] <= node.threshold
        stack.append((node.left, rows[left]))
        stack.append((node.right, rows[~left]))
    return predictions, leaf_ids


def route_soft(tree: TlmTree, features, strategy: str = "path") -> np.ndarray:
    """
    Probability-weighted blend of node regressors

    path: walk the hard path; the root weighs 1 and each next node weighs its
        parent's weight times the probability of the branch taken.
    full: every node weighs its arrival mass (product of branch probabilities).
    leaves: only leaves contribute, weighted by arrival mass.

    All strategies normalise by the weight sum.
    """
    if strategy not in SOFT_STRATEGIES:
        raise DataError(f"Unknown soft routing strategy {strategy!r}; expected one of {SOFT_STRATEGIES}")
    X = _check_rows(tree, features)
    numerator = np.zeros(X.shape[0])
    denominator = np.zeros(X.shape[0])

    stack = [(tree.root, np.arange(X.shape[0]), np.ones(X.shape[0]))]
    while stack:
        node, rows, weight = stack.pop()
        if rows.size == 0:
            continue
        if node.is_leaf or strategy != "leaves":
            numerator[rows] += weight * node.regressor.predict(X[rows])
            denominator[rows] += weight
        if node.is_leaf:
            continue

        z = node.classifier.logits(X[rows])
        p_left, p_right = expit(z), expit(-z)
        if strategy == "path":
            left = z >= 0
            stack.append((node.left, rows[left], weight[left] * p_left[left]))
            stack.append((node.right, rows[~left], weight[~left] * p_right[~left]))
        else:
            stack.append((node.left, rows, weight * p_left))
            stack.append((node.right, rows, weight * p_right))

    return numerator / denominator


def predict_hard(tree: TlmTree, f) -> Tuple[float, int]:
    """Hard-routed prediction and leaf id for one feature vector"""
    predictions, leaf_ids = route_hard(tree, _check_vector(tree, f))
    return float(predictions[0]), int(leaf_ids[0])


def predict_soft(tree: TlmTree, f, strategy: str = "path") -> float:
    return float(route_soft(tree, _check_vector(tree, f), strategy)[0])


def predict_oracle(tree: TlmTree, f, y_true: float) -> float:
    if not np.isfinite(y_true):
        raise DataError(f"Oracle routing needs a finite y_true, got {y_true}")
    predictions, _ = route_oracle(tree, _check_vector(tree, f), [y_true])
    return float(predictions[0])


def predict_batch(
    tree: TlmTree,
    data,
    mode: RoutingMode = "hard",
    soft_strategy: str = "path",
) -> BatchPrediction:
    """
    Predict every row and score the predictions when targets are known

    Args:
        tree: Trained tree
        data: Dataset, or a bare feature matrix (no metrics; oracle mode unavailable)
        mode: hard | soft | oracle
        soft_strategy: path | full | leaves (soft mode only)

    Returns:
        BatchPrediction: per-row predictions and leaf ids (the hard leaf in soft
        mode), aggregate metrics and metrics per leaf
    """
    if mode not in ROUTING_MODES:
        raise DataError(f"Unknown routing mode {mode!r}; expected one of {ROUTING_MODES}")
    if isinstance(data, Dataset):
        features, targets = data.features, data.targets
    else:
        features, targets = _check_rows(tree, data), None

    if mode == "oracle":
        if targets is None:
            raise DataError("Oracle routing requires target values")
        predictions, leaf_ids = route_oracle(tree, features, targets)
    else:
        predictions, leaf_ids = route_hard(tree, features)
        if mode == "soft":
            predictions = route_soft(tree, features, soft_strategy)

    if targets is None:
        return BatchPrediction(predictions, leaf_ids)

    per_leaf = {
        int(leaf): compute_metrics(predictions[leaf_ids == leaf], targets[leaf_ids == leaf])
        for leaf in np.unique(leaf_ids)
    }
    metrics = compute_metrics(predictions, targets)
    logger.debug(f"{mode} routing over {len(predictions)} rows: MAE {metrics.mae:.6g}, RMSE {metrics.rmse:.6g}")
    return BatchPrediction(predictions, leaf_ids, metrics, per_leaf)
