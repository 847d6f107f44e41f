"""
Model file: JSON document validated by pydantic

Floats are written through their shortest round-trip representation, so a
loaded model reproduces the saved one's predictions bit for bit.
"""

import json
import logging
from dataclasses import asdict
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, ValidationError

from ..config import AppConfig, FitConfig, MixupConfig, RunConfig, TreeConfig
from ..errors import ConfigError, DataError
from ..models.feature_net import FeatureNet
from ..models.layers import Dense
from ..models.linear import LinearClassifier, LinearRegressor
from ..models.tlm_model import TlmModel
from ..models.tree import NodeDiagnostics, TlmNode, TlmTree, child_ids

logger = logging.getLogger(__name__)

# run settings that name files rather than shape the model
_PATH_FIELDS = {"data", "test_data", "out", "report", "loss_curve"}


class _Record(BaseModel):
    model_config = ConfigDict(extra="forbid")


class RegressorRecord(_Record):
    r: List[float]
    b: float


class ClassifierRecord(_Record):
    w: List[float]
    c: float


class DiagnosticsRecord(_Record):
    n_train: int
    train_sse: float
    train_mae: float
    y_min: float
    y_max: float


class NodeRecord(_Record):
    id: int
    depth: int
    regressor: RegressorRecord
    threshold: Optional[float] = None
    classifier: Optional[ClassifierRecord] = None
    left: Optional["NodeRecord"] = None
    right: Optional["NodeRecord"] = None
    diagnostics: DiagnosticsRecord


NodeRecord.model_rebuild()


class LayerRecord(_Record):
    shape: List[int]
    weight: List[List[float]]
    bias: List[float]
    activation: str


class FeatureNetRecord(_Record):
    dim: int
    n_blocks: int
    dropout: float
    leaky_slope: float
    layers: List[LayerRecord]
    loss_curve: List[float] = []


class ModelFile(_Record):
    format_version: int
    dim: int
    tree: NodeRecord
    feature_net: Optional[FeatureNetRecord] = None
    training_config: Dict[str, Any] = {}


def _node_record(node: TlmNode) -> NodeRecord:
    record = NodeRecord(
        id=node.node_id,
        depth=node.depth,
        regressor=RegressorRecord(r=node.regressor.r.tolist(), b=node.regressor.b),
        diagnostics=DiagnosticsRecord(**asdict(node.diagnostics)),
    )
    if not node.is_leaf:
        record.threshold = node.threshold
        record.classifier = ClassifierRecord(w=node.classifier.w.tolist(), c=node.classifier.c)
        record.left = _node_record(node.left)
        record.right = _node_record(node.right)
    return record


def _net_record(net: FeatureNet) -> FeatureNetRecord:
    layers = [
        LayerRecord(
            shape=list(layer.shape),
            weight=layer.weight.tolist(),
            bias=layer.bias.tolist(),
            activation="relu" if index % 2 == 0 else "leaky_relu",
        )
        for index, layer in enumerate(net.layers)
    ]
    return FeatureNetRecord(
        dim=net.dim,
        n_blocks=net.n_blocks,
        dropout=net.dropout,
        leaky_slope=net.leaky_slope,
        layers=layers,
        loss_curve=[float(v) for v in net.loss_curve],
    )


def to_model_file(model: TlmModel, run_config: Optional[RunConfig] = None) -> ModelFile:
    training_config: Dict[str, Any] = {"tree": asdict(model.tree.config)}
    if run_config is not None:
        training_config["run"] = run_config.model_dump(exclude=_PATH_FIELDS)
    return ModelFile(
        format_version=AppConfig.format_version,
        dim=model.dim,
        tree=_node_record(model.tree.root),
        feature_net=_net_record(model.feature_net) if model.feature_net is not None else None,
        training_config=training_config,
    )


def save_model(model: TlmModel, path, run_config: Optional[RunConfig] = None) -> str:
    """
    Write the model as JSON

    Args:
        model: Trained model
        path: Output file
        run_config: Run settings to echo (file paths are left out)

    Returns:
        str: path written
    """
    path = Path(path)
    if path.parent and not path.parent.exists():
        path.parent.mkdir(parents=True, exist_ok=True)
    document = to_model_file(model, run_config).model_dump_json(indent=AppConfig.json_indent)
    path.write_text(document + "\n", encoding="utf-8")
    logger.info(f"Saved model ({model.tree.n_leaves} leaves) to {path}")
    return str(path)


def _vector(values: List[float], dim: int, what: str) -> np.ndarray:
    array = np.asarray(values, dtype=np.float64)
    if array.shape != (dim,):
        raise DataError(f"{what} has length {array.size}, expected {dim}")
    return array


def _node_from_record(record: NodeRecord, dim: int, expected_id: int, expected_depth: int) -> TlmNode:
    if record.id != expected_id or record.depth != expected_depth:
        raise DataError(
            f"Node numbering broken: found id {record.id} at depth {record.depth}, "
            f"expected id {expected_id} at depth {expected_depth}"
        )
    node = TlmNode(
        node_id=record.id,
        depth=record.depth,
        regressor=LinearRegressor(_vector(record.regressor.r, dim, f"Node {record.id} regressor"), record.regressor.b),
        diagnostics=NodeDiagnostics(**record.diagnostics.model_dump()),
    )

    children = (record.left, record.right)
    if all(child is None for child in children):
        if record.classifier is not None or record.threshold is not None:
            raise DataError(f"Leaf {record.id} carries a split")
        return node
    if any(child is None for child in children) or record.classifier is None or record.threshold is None:
        raise DataError(f"Internal node {record.id} is missing its split or a child")

    left_id, right_id = child_ids(record.id)
    node.classifier = LinearClassifier(_vector(record.classifier.w, dim, f"Node {record.id} classifier"), record.classifier.c)
    node.threshold = record.threshold
    node.left = _node_from_record(record.left, dim, left_id, record.depth + 1)
    node.right = _node_from_record(record.right, dim, right_id, record.depth + 1)
    return node


def _net_from_record(record: FeatureNetRecord, dim: int) -> FeatureNet:
    if record.dim != dim or len(record.layers) != 2 * record.n_blocks:
        raise DataError(f"Feature net record is inconsistent with model dimension {dim}")
    layers = []
    for layer in record.layers:
        weight = np.asarray(layer.weight, dtype=np.float64)
        if list(weight.shape) != [dim, dim] or layer.shape != [dim, dim] or len(layer.bias) != dim:
            raise DataError(f"Feature net layer has shape {list(weight.shape)}, expected [{dim}, {dim}]")
        layers.append(Dense(weight, np.asarray(layer.bias, dtype=np.float64)))
    return FeatureNet(
        dim=dim,
        layers=layers,
        dropout=record.dropout,
        leaky_slope=record.leaky_slope,
        loss_curve=list(record.loss_curve),
    )


def _tree_config(training_config: Dict[str, Any]) -> TreeConfig:
    settings = dict(training_config.get("tree", {}))
    try:
        fit = FitConfig(**settings.pop("fit", {}))
        mixup = MixupConfig(**settings.pop("mixup", {}))
        return TreeConfig(fit=fit, mixup=mixup, **settings)
    except TypeError as e:
        raise DataError(f"Unrecognised tree settings in model file: {e}") from e
    except ConfigError as e:
        raise DataError(f"Invalid tree settings in model file: {e}") from e


def load_model(path) -> TlmModel:
    """
    Read and validate a model file

    Raises:
        DataError: missing, unparsable or inconsistent file, or a format_version
            this build does not read
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"Model file not found: {path}")
    try:
        document = json.loads(path.read_text(encoding="utf-8"))
    except (json.JSONDecodeError, UnicodeDecodeError) as e:
        raise DataError(f"Model file {path} is not valid JSON: {e}") from e

    if not isinstance(document, dict) or document.get("format_version") != AppConfig.format_version:
        found = document.get("format_version") if isinstance(document, dict) else None
        raise DataError(f"Unsupported model format_version {found!r} in {path}; expected {AppConfig.format_version}")

    try:
        record = ModelFile.model_validate(document)
    except ValidationError as e:
        raise DataError(f"Corrupt model file {path}: {e}") from e
    if record.dim < 1:
        raise DataError(f"Model dimension must be >= 1, got {record.dim}")

    root = _node_from_record(record.tree, record.dim, 0, 0)
    tree = TlmTree(root=root, dim=record.dim, config=_tree_config(record.training_config))
    net = _net_from_record(record.feature_net, record.dim) if record.feature_net is not None else None
    logger.debug(f"Loaded model from {path}: {tree.n_leaves} leaves, dim {tree.dim}")
    return TlmModel(tree, net)
