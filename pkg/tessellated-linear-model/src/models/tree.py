"""
Tessellation tree: threshold scanning over the response, split scoring by
post-split squared error and recursive construction.

Every node carries its own ridge regressor (soft routing and the feature
stage both need internal regressors). An internal node also carries the
logistic classifier trained on the label rule y <= threshold, and the children
are fit on the label partition of the node's rows.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Iterator, List, Optional, Tuple

import numpy as np

from ..config import TreeConfig
from ..errors import DataError
from ..preprocessing.augmentation import mixup_augment
from ..preprocessing.dataset import Dataset
from .linear import LinearClassifier, LinearRegressor, affine, fit_classifier, fit_regressor

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class NodeDiagnostics:
    """Training statistics of a node, on its original (unaugmented) rows"""
    n_train: int
    train_sse: float
    train_mae: float
    y_min: float
    y_max: float


@dataclass(eq=False)
class TlmNode:
    node_id: int
    depth: int
    regressor: LinearRegressor
    diagnostics: NodeDiagnostics
    classifier: Optional[LinearClassifier] = None
    threshold: Optional[float] = None
    left: Optional["TlmNode"] = None
    right: Optional["TlmNode"] = None

    @property
    def is_leaf(self) -> bool:
        return self.left is None


@dataclass(eq=False)
class TlmTree:
    root: TlmNode
    dim: int
    config: TreeConfig

    def iter_nodes(self) -> Iterator[TlmNode]:
        """Pre-order traversal"""
        stack = [self.root]
        while stack:
            node = stack.pop()
            yield node
            if not node.is_leaf:
                stack.append(node.right)
                stack.append(node.left)

    def leaves(self) -> List[TlmNode]:
        return [node for node in self.iter_nodes() if node.is_leaf]

    @property
    def n_leaves(self) -> int:
        return len(self.leaves())

    @property
    def depth(self) -> int:
        return max(node.depth for node in self.leaves())

    def node(self, node_id: int) -> TlmNode:
        for node in self.iter_nodes():
            if node.node_id == node_id:
                return node
        raise KeyError(node_id)

    def truncated(self, depth: int) -> "TlmTree":
        """Copy in which every node at `depth` becomes a leaf"""
        def cut(node: TlmNode) -> TlmNode:
            if node.is_leaf:
                return node
            if node.depth >= depth:
                return replace(node, classifier=None, threshold=None, left=None, right=None)
            return replace(node, left=cut(node.left), right=cut(node.right))

        return TlmTree(root=cut(self.root), dim=self.dim, config=self.config)


@dataclass(eq=False)
class SplitCandidate:
    threshold: float
    classifier: LinearClassifier
    left_regressor: Optional[LinearRegressor]
    right_regressor: Optional[LinearRegressor]
    left_mask: np.ndarray
    reduction: float
    left_sse: float = float("nan")
    right_sse: float = float("nan")


@dataclass(frozen=True)
class Halfspace:
    """Constraint w . f + c >= 0 (left) or w . f + c < 0 (right)"""
    w: np.ndarray
    c: float
    side: str

    def contains(self, features: np.ndarray) -> np.ndarray:
        z = affine(np.atleast_2d(features), self.w, self.c)
        return z >= 0 if self.side == "left" else z < 0


@dataclass(frozen=True)
class LeafCell:
    leaf_id: int
    constraints: Tuple[Halfspace, ...]
    regressor: LinearRegressor

    def contains(self, features: np.ndarray) -> np.ndarray:
        inside = np.ones(np.atleast_2d(features).shape[0], dtype=bool)
        for halfspace in self.constraints:
            inside &= halfspace.contains(features)
        return inside


def child_ids(node_id: int) -> Tuple[int, int]:
    return 2 * node_id + 1, 2 * node_id + 2


def _sse(regressor: LinearRegressor, data: Dataset) -> float:
    residuals = data.targets - regressor.predict(data.features)
    return float(residuals @ residuals)


def candidate_thresholds(targets: np.ndarray, cfg: TreeConfig) -> np.ndarray:
    """
    Gap-aware interior quantiles of the node's targets

    Level i/(K+1) owns the window [(i - 1/2)/(K+1), (i + 1/2)/(K+1)] of the
    empirical CDF. Its candidate is the midpoint of the widest gap between
    consecutive distinct targets whose CDF position falls in the window (ties go
    to the gap nearest the level). Candidates leaving fewer than min_leaf rows
    on either side of y <= t are dropped.

    Returns:
        Sorted unique thresholds, possibly empty
    """
    targets = np.asarray(targets, dtype=np.float64)
    values = np.unique(targets)
    if values.size < 2 or values[-1] - values[0] <= cfg.purity_eps:
        return np.empty(0)

    n = targets.size
    widths = np.diff(values)
    midpoints = values[:-1] + widths / 2.0
    # share of rows at or below the lower end of each gap
    cdf = np.searchsorted(np.sort(targets), values[:-1], side="right") / n

    k = cfg.n_thresholds
    chosen = []
    for i in range(1, k + 1):
        level = i / (k + 1)
        in_window = np.flatnonzero(np.abs(cdf - level) <= 0.5 / (k + 1))
        if in_window.size == 0:
            chosen.append(int(np.argmin(np.abs(cdf - level))))
            continue
        order = np.lexsort((np.abs(cdf[in_window] - level), -widths[in_window]))
        chosen.append(int(in_window[order[0]]))

    thresholds = np.unique(midpoints[chosen])
    n_left = np.searchsorted(np.sort(targets), thresholds, side="right")
    legal = (n_left >= cfg.min_leaf) & (n - n_left >= cfg.min_leaf)
    return thresholds[legal]


def evaluate_split(
    node_data: Dataset,
    t: float,
    cfg: TreeConfig,
    augmented: Optional[Dataset] = None,
    parent_sse: Optional[float] = None,
) -> SplitCandidate:
    """
    Score the split at threshold t

    The classifier learns 1{y <= t}. Each side gets a freshly fit regressor, and
    reduction = SSE_parent - (SSE_left + SSE_right), every SSE measured on
    original rows only.

    Args:
        node_data: The node's original rows
        t: Candidate threshold
        cfg: Tree settings
        augmented: Mixup-augmented training rows for the fits (optional)
        parent_sse: SSE of the node's own regressor (computed when omitted)
    """
    train = augmented if augmented is not None else node_data
    label_left = node_data.targets <= t
    n_left = int(label_left.sum())
    n_right = node_data.size - n_left
    if cfg.partition_by == "label" and min(n_left, n_right) < cfg.min_leaf:
        raise DataError(
            f"Threshold {t} splits {node_data.size} rows into {n_left}/{n_right}, "
            f"below min_leaf={cfg.min_leaf}"
        )

    train_labels = (train.targets <= t).astype(np.float64)
    classifier = fit_classifier(train.features, train_labels, cfg.fit)

    if cfg.partition_by == "label":
        left_mask = label_left
        train_left = train_labels == 1
    else:
        left_mask = classifier.goes_left(node_data.features)
        train_left = classifier.goes_left(train.features)
        if min(int(left_mask.sum()), int((~left_mask).sum())) < cfg.min_leaf:
            return SplitCandidate(t, classifier, None, None, left_mask, reduction=-np.inf)

    if parent_sse is None:
        parent_sse = _sse(fit_regressor(train, cfg.fit), node_data)

    left_regressor = fit_regressor(train.subset(train_left), cfg.fit)
    right_regressor = fit_regressor(train.subset(~train_left), cfg.fit)
    left_sse = _sse(left_regressor, node_data.subset(left_mask))
    right_sse = _sse(right_regressor, node_data.subset(~left_mask))

    return SplitCandidate(
        threshold=float(t),
        classifier=classifier,
        left_regressor=left_regressor,
        right_regressor=right_regressor,
        left_mask=left_mask,
        reduction=parent_sse - (left_sse + right_sse),
        left_sse=left_sse,
        right_sse=right_sse,
    )


def _node_seed(cfg: TreeConfig, node_id: int) -> int:
    return int(np.random.SeedSequence([cfg.seed, node_id]).generate_state(1)[0])


def _grow(data: Dataset, cfg: TreeConfig, node_id: int, depth: int, pool) -> TlmNode:
    train = data
    if cfg.mixup.enabled and data.size >= 2:
        train = mixup_augment(data, cfg.mixup, _node_seed(cfg, node_id))

    regressor = fit_regressor(train, cfg.fit)
    residuals = data.targets - regressor.predict(data.features)
    sse = float(residuals @ residuals)
    diagnostics = NodeDiagnostics(
        n_train=data.size,
        train_sse=sse,
        train_mae=float(np.mean(np.abs(residuals))),
        y_min=float(data.targets.min()),
        y_max=float(data.targets.max()),
    )
    node = TlmNode(node_id=node_id, depth=depth, regressor=regressor, diagnostics=diagnostics)

    if depth >= cfg.max_depth:
        return node
    if diagnostics.y_max - diagnostics.y_min <= cfg.purity_eps or sse / data.size <= cfg.purity_eps:
        logger.debug(f"Node {node_id}: pure ({data.size} rows), leaf")
        return node

    thresholds = candidate_thresholds(data.targets, cfg)
    if thresholds.size == 0:
        logger.debug(f"Node {node_id}: no legal threshold ({data.size} rows), leaf")
        return node

    def score(t):
        return evaluate_split(data, t, cfg, augmented=train, parent_sse=sse)

    candidates = list(pool.map(score, thresholds)) if pool else [score(t) for t in thresholds]
    best = None
    for candidate in candidates:
        logger.debug(f"Node {node_id}: t={candidate.threshold:.6g} reduction={candidate.reduction:.6g}")
        if best is None or candidate.reduction > best.reduction:
            best = candidate

    if best.reduction <= 0:
        logger.debug(f"Node {node_id}: best reduction {best.reduction:.3g} <= 0, leaf")
        return node

    left_id, right_id = child_ids(node_id)
    node.classifier = best.classifier
    node.threshold = best.threshold
    node.left = _grow(data.subset(best.left_mask), cfg, left_id, depth + 1, pool)
    node.right = _grow(data.subset(~best.left_mask), cfg, right_id, depth + 1, pool)
    return node


def build_tree(data: Dataset, cfg: TreeConfig) -> TlmTree:
    """
    Recursively partition the data (greedy, depth-first)

    Args:
        data: Training rows
        cfg: Tree settings

    Returns:
        TlmTree: the fitted tessellation
    """
    if data.size < 1:
        raise DataError("Cannot build a tree on an empty dataset")

    if cfg.n_jobs > 1:
        with ThreadPoolExecutor(max_workers=cfg.n_jobs) as pool:
            root = _grow(data, cfg, 0, 0, pool)
    else:
        root = _grow(data, cfg, 0, 0, None)

    tree = TlmTree(root=root, dim=data.dim, config=cfg)
    logger.info(
        f"Built tree on {data.size} rows: {tree.n_leaves} leaves, depth {tree.depth}, "
        f"training SSE {training_sse_by_depth(tree)[-1]:.6g}"
    )
    return tree


def leaf_cells(tree: TlmTree) -> List[LeafCell]:
    """Each leaf with the ordered halfspace constraints along its root path"""
    cells = []

    def walk(node: TlmNode, path: Tuple[Halfspace, ...]):
        if node.is_leaf:
            cells.append(LeafCell(node.node_id, path, node.regressor))
            return
        w, c = node.classifier.w, node.classifier.c
        walk(node.left, path + (Halfspace(w, c, "left"),))
        walk(node.right, path + (Halfspace(w, c, "right"),))

    walk(tree.root, ())
    return cells


def training_sse_by_depth(tree: TlmTree) -> List[float]:
    """Training SSE of the tree truncated at each depth 0..max_depth"""
    nodes = list(tree.iter_nodes())
    totals = []
    for k in range(max(tree.config.max_depth, tree.depth) + 1):
        frontier = [n for n in nodes if n.depth == k or (n.is_leaf and n.depth < k)]
        totals.append(float(sum(n.diagnostics.train_sse for n in frontier)))
    return totals
