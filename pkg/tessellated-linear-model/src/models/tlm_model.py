"""
TLM model: optional feature network followed by the tessellation tree
"""

import logging
import time
from dataclasses import dataclass
from typing import Dict, Optional, Tuple

import numpy as np

from ..config import RunConfig
from ..preprocessing.dataset import Dataset
from ..utils.metrics import compute_metrics
from .feature_net import FeatureNet, train_features
from .routing import BatchPrediction, RoutingMode, predict_batch, route_hard, route_oracle
from .tree import TlmTree, build_tree, training_sse_by_depth

logger = logging.getLogger(__name__)


@dataclass(eq=False)
class TlmModel:
    tree: TlmTree
    feature_net: Optional[FeatureNet] = None

    @property
    def dim(self) -> int:
        return self.tree.dim

    def transform(self, features: np.ndarray) -> np.ndarray:
        """Features as the tree sees them (through the net in evaluation mode, when present)"""
        features = np.asarray(features, dtype=np.float64)
        if self.feature_net is None:
            return features
        return self.feature_net.transform(features)

    def predict(self, data, mode: RoutingMode = "hard", soft_strategy: str = "path") -> BatchPrediction:
        """Batch prediction over a Dataset or a bare feature matrix"""
        if isinstance(data, Dataset):
            data = data.with_features(self.transform(data.features))
        else:
            data = self.transform(data)
        return predict_batch(self.tree, data, mode, soft_strategy)

    def truncated(self, depth: int) -> "TlmModel":
        return TlmModel(self.tree.truncated(depth), self.feature_net)


def train_model(data: Dataset, cfg: RunConfig) -> Tuple[TlmModel, Dict]:
    """
    Build the tree and, when requested, optimise features against it

    With cfg.iterate the tree is rebuilt once on the optimised features.

    Returns:
        Tuple of (model, training summary)
    """
    started = time.perf_counter()
    tree_cfg = cfg.tree_config()
    tree = build_tree(data, tree_cfg)
    net = None

    if cfg.feature_opt:
        net = train_features(tree, data, cfg.train_config())
        if cfg.iterate:
            logger.info("Rebuilding the tree on optimised features")
            tree = build_tree(data.with_features(net.transform(data.features)), tree_cfg)

    model = TlmModel(tree, net)
    transformed = model.transform(data.features)
    label_predictions, _ = route_oracle(tree, transformed, data.targets)
    hard_predictions, _ = route_hard(tree, transformed)

    summary = {
        "n_train": data.size,
        "dim": data.dim,
        "n_leaves": tree.n_leaves,
        "depth": tree.depth,
        "sse_by_depth": training_sse_by_depth(tree),
        "train_mse_label": float(np.mean((label_predictions - data.targets) ** 2)),
        "train_mse_hard": float(np.mean((hard_predictions - data.targets) ** 2)),
        "train_metrics_hard": compute_metrics(hard_predictions, data.targets).to_dict(),
        "wall_time_seconds": time.perf_counter() - started,
    }
    if net is not None:
        summary["feature_loss_initial"] = net.loss_curve[0]
        summary["feature_loss_final"] = net.loss_curve[-1]
    return model, summary
