"""
Tree inspection report and tessellation grid export

Plotting is left to external tools; this module produces the data behind the
per-node error breakdown and the per-depth tessellation pictures.
"""

import logging
from dataclasses import asdict, dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..errors import DataError
from ..models.linear import affine
from ..models.tlm_model import TlmModel
from ..preprocessing.dataset import Dataset

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class NodeSummary:
    node_id: int
    depth: int
    is_leaf: bool
    threshold: Optional[float]
    n_train: int
    train_mae: float
    y_min: float
    y_max: float
    n_test: Optional[int] = None
    test_mae: Optional[float] = None


def _label_routed_rows(model: TlmModel, test: Dataset) -> Tuple[np.ndarray, Dict[int, np.ndarray]]:
    """Transformed test features and the rows reaching each node under the label rule"""
    features = model.transform(test.features)
    reached = {}
    stack = [(model.tree.root, np.arange(test.size))]
    while stack:
        node, rows = stack.pop()
        reached[node.node_id] = rows
        if not node.is_leaf:
            left = test.targets[rows] <= node.threshold
            stack.append((node.left, rows[left]))
            stack.append((node.right, rows[~left]))
    return features, reached


def node_summaries(model: TlmModel, test: Optional[Dataset] = None) -> List[NodeSummary]:
    """
    One summary per node in pre-order

    Args:
        model: Trained model
        test: Optional labelled rows; each node's test MAE is its own
            regressor's error on the rows the label rule sends to it

    Returns:
        List[NodeSummary]
    """
    if test is not None and test.dim != model.dim:
        raise DataError(f"Model expects {model.dim} features, test data has {test.dim}")
    if test is not None:
        features, routed = _label_routed_rows(model, test)

    summaries = []
    for node in model.tree.iter_nodes():
        n_test = test_mae = None
        if test is not None:
            rows = routed[node.node_id]
            n_test = int(rows.size)
            if rows.size:
                residuals = affine(features[rows], node.regressor.r, node.regressor.b) - test.targets[rows]
                test_mae = float(np.mean(np.abs(residuals)))
        summaries.append(NodeSummary(
            node_id=node.node_id,
            depth=node.depth,
            is_leaf=node.is_leaf,
            threshold=node.threshold,
            n_train=node.diagnostics.n_train,
            train_mae=node.diagnostics.train_mae,
            y_min=node.diagnostics.y_min,
            y_max=node.diagnostics.y_max,
            n_test=n_test,
            test_mae=test_mae,
        ))
    return summaries


def render_text(summaries: Sequence[NodeSummary]) -> str:
    """Indented tree, one line per node"""
    lines = []
    for s in summaries:
        split = "leaf" if s.is_leaf else f"y <= {s.threshold:.6g}"
        line = f"{'  ' * s.depth}[{s.node_id}] {split}  n={s.n_train}  train MAE={s.train_mae:.4f}"
        if s.n_test is not None:
            test_mae = "n/a" if s.test_mae is None else f"{s.test_mae:.4f}"
            line += f"  test n={s.n_test}  test MAE={test_mae}"
        lines.append(line)
    return "\n".join(lines)


def tree_report(model: TlmModel, test: Optional[Dataset] = None) -> Dict:
    summaries = node_summaries(model, test)
    return {
        "dim": model.dim,
        "depth": model.tree.depth,
        "n_leaves": model.tree.n_leaves,
        "feature_net": model.feature_net is not None,
        "nodes": [asdict(s) for s in summaries],
    }


def tessellation_grid(
    model: TlmModel,
    axes: Tuple[int, int] = (0, 1),
    anchor: Optional[Sequence[float]] = None,
    bounds: Tuple[float, float] = (-1.0, 1.0),
    resolution: int = 50,
    depths: Optional[Sequence[int]] = None,
) -> List[Dict]:
    """
    Hard-routed leaf ids and predictions over a 2-D grid

    Two coordinates sweep `bounds`; the rest stay at `anchor`. Every point goes
    through the full model (feature net first, when present).

    Args:
        model: Trained model, dim >= 2
        axes: The two swept coordinates
        anchor: Values of the fixed coordinates (default zeros)
        bounds: (lo, hi) of both swept coordinates
        resolution: Grid points per axis
        depths: Truncation depths to render (default 0..tree depth)

    Returns:
        List of rows {depth, x1, x2, leaf_id, prediction}
    """
    dim = model.dim
    if dim < 2:
        raise DataError(f"Tessellation grid needs a model with dim >= 2, got {dim}")
    i, j = axes
    if not (0 <= i < dim and 0 <= j < dim) or i == j:
        raise DataError(f"Axes {list(axes)} must be two distinct indices in [0, {dim})")
    if resolution < 2:
        raise DataError(f"resolution must be >= 2, got {resolution}")
    lo, hi = bounds
    if not lo < hi:
        raise DataError(f"bounds must satisfy lo < hi, got {list(bounds)}")

    base = np.zeros(dim) if anchor is None else np.asarray(anchor, dtype=np.float64)
    if base.shape != (dim,):
        raise DataError(f"anchor needs {dim} values, got {base.size}")

    ticks = np.linspace(lo, hi, resolution)
    x1, x2 = np.meshgrid(ticks, ticks, indexing="ij")
    points = np.tile(base, (x1.size, 1))
    points[:, i] = x1.ravel()
    points[:, j] = x2.ravel()

    if depths is None:
        depths = range(model.tree.depth + 1)

    rows = []
    for depth in depths:
        if depth < 0:
            raise DataError(f"Depths must be >= 0, got {depth}")
        prediction = model.truncated(depth).predict(points, "hard")
        rows.extend(
            {"depth": int(depth), "x1": float(a), "x2": float(b), "leaf_id": int(leaf), "prediction": float(p)}
            for a, b, leaf, p in zip(points[:, i], points[:, j], prediction.leaf_ids, prediction.predictions)
        )
        logger.debug(f"Depth {depth}: {len(np.unique(prediction.leaf_ids))} cells on the grid")
    return rows
