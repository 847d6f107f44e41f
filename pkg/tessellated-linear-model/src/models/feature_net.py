"""
Residual feature network trained against a frozen tree

Each block maps u to u + drop(leaky(W2 . drop(relu(W1 . u + b1)) + b2)); input and
output keep the tree's dimension, so its hyperplanes and regressors stay valid
on the transformed features. The loss routes every row along its label path
(y <= t at each internal node) and averages one BCE term per internal node and
one squared error per node on the path.
"""

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
from scipy.special import expit

from ..config import TrainConfig
from ..errors import DataError, NumericError
from ..preprocessing.dataset import Dataset
from .layers import Dense, dropout_mask, leaky_relu, leaky_relu_backward, relu, relu_backward
from .linear import affine
from .tree import TlmTree

logger = logging.getLogger(__name__)

DEFAULT_INIT_SCALE = 0.01


@dataclass(eq=False)
class FeatureNet:
    dim: int
    layers: List[Dense]
    dropout: float = 0.2
    leaky_slope: float = 0.01
    loss_curve: List[float] = field(default_factory=list)

    @classmethod
    def initialise(
        cls,
        dim: int,
        n_blocks: int = 2,
        dropout: float = 0.2,
        leaky_slope: float = 0.01,
        seed: int = 0,
        init_scale: float = DEFAULT_INIT_SCALE,
    ) -> "FeatureNet":
        """Weights ~ Normal(0, init_scale / sqrt(dim)), biases zero: close to the identity map"""
        if dim < 1 or n_blocks < 1:
            raise DataError(f"FeatureNet needs dim >= 1 and n_blocks >= 1, got {dim}, {n_blocks}")
        if not 0 <= dropout < 1:
            raise DataError(f"dropout must lie in [0, 1), got {dropout}")
        rng = np.random.default_rng(seed)
        scale = init_scale / np.sqrt(dim)
        layers = [Dense.initialise(dim, dim, scale, rng) for _ in range(2 * n_blocks)]
        return cls(dim=dim, layers=layers, dropout=dropout, leaky_slope=leaky_slope)

    @property
    def n_blocks(self) -> int:
        return len(self.layers) // 2

    def parameters(self) -> List[np.ndarray]:
        """Flat list [W1, b1, W2, b2, ...]; the arrays are the live parameters"""
        params = []
        for layer in self.layers:
            params.extend([layer.weight, layer.bias])
        return params

    def set_parameters(self, params: List[np.ndarray]):
        if len(params) != 2 * len(self.layers):
            raise DataError(f"Expected {2 * len(self.layers)} parameter arrays, got {len(params)}")
        for layer, weight, bias in zip(self.layers, params[0::2], params[1::2]):
            layer.weight = np.array(weight, dtype=np.float64).reshape(layer.weight.shape)
            layer.bias = np.array(bias, dtype=np.float64).reshape(layer.bias.shape)

    def copy(self) -> "FeatureNet":
        return FeatureNet(
            dim=self.dim,
            layers=[layer.copy() for layer in self.layers],
            dropout=self.dropout,
            leaky_slope=self.leaky_slope,
            loss_curve=list(self.loss_curve),
        )

    def transform(self, features: np.ndarray) -> np.ndarray:
        """Evaluation-mode forward pass over a batch"""
        out, _ = _forward_batch(self, _check_rows(self, features), training=False, rng=None)
        return out


def _check_rows(net: FeatureNet, features) -> np.ndarray:
    rows = np.asarray(features, dtype=np.float64)
    if rows.ndim == 1:
        rows = rows.reshape(1, -1)
    if rows.ndim != 2 or rows.shape[1] != net.dim:
        raise DataError(f"FeatureNet expects {net.dim} features, got shape {np.shape(features)}")
    return rows


def _forward_batch(net: FeatureNet, x: np.ndarray, training: bool, rng) -> Tuple[np.ndarray, list]:
    rate = net.dropout if training else 0.0
    cache = []
    u = x
    for first, second in zip(net.layers[0::2], net.layers[1::2]):
        z1 = first.forward(u)
        m1 = dropout_mask(z1.shape, rate, rng)
        h1 = relu(z1) * m1
        z2 = second.forward(h1)
        m2 = dropout_mask(z2.shape, rate, rng)
        out = u + leaky_relu(z2, net.leaky_slope) * m2
        cache.append((u, z1, m1, h1, z2, m2))
        u = out
    return u, cache


def _backward_batch(net: FeatureNet, cache: list, grad_out: np.ndarray) -> List[np.ndarray]:
    grads: List[np.ndarray] = [None] * (2 * len(net.layers))
    g = grad_out
    for block in reversed(range(net.n_blocks)):
        first, second = net.layers[2 * block], net.layers[2 * block + 1]
        u, z1, m1, h1, z2, m2 = cache[block]
        g_z2 = leaky_relu_backward(z2, g * m2, net.leaky_slope)
        g_h1, g_w2, g_b2 = second.backward(h1, g_z2)
        g_z1 = relu_backward(z1, g_h1 * m1)
        g_u, g_w1, g_b1 = first.backward(u, g_z1)
        grads[4 * block: 4 * block + 4] = [g_w1, g_b1, g_w2, g_b2]
        # skip connection
        g = g + g_u
    return grads


def forward(net: FeatureNet, f, training: bool = False, seed: int = 0) -> np.ndarray:
    """
    Transform one feature vector

    Args:
        net: Feature network
        f: Vector of length net.dim
        training: Apply dropout (masks drawn from `seed`)
        seed: Dropout seed

    Returns:
        np.ndarray: transformed vector, same length
    """
    f = np.asarray(f, dtype=np.float64)
    if f.ndim != 1:
        raise DataError(f"Expected a single feature vector, got shape {f.shape}")
    rng = np.random.default_rng(seed) if training else None
    out, _ = _forward_batch(net, _check_rows(net, f), training, rng)
    return out[0]


def _tree_loss(tree: TlmTree, transformed: np.ndarray, targets: np.ndarray) -> Tuple[float, np.ndarray]:
    """Joint loss on transformed features and its gradient with respect to them"""
    total = 0.0
    count = 0
    grad = np.zeros_like(transformed)

    stack = [(tree.root, np.arange(transformed.shape[0]))]
    while stack:
        node, rows = stack.pop()
        if rows.size == 0:
            continue
        f, y = transformed[rows], targets[rows]

        residual = affine(f, node.regressor.r, node.regressor.b) - y
        total += float(residual @ residual)
        count += rows.size
        grad[rows] += 2.0 * residual[:, None] * node.regressor.r

        if node.is_leaf:
            continue
        z = affine(f, node.classifier.w, node.classifier.c)
        label = (y <= node.threshold).astype(np.float64)
        total += float(np.sum(np.logaddexp(0.0, z) - label * z))
        count += rows.size
        grad[rows] += (expit(z) - label)[:, None] * node.classifier.w

        left = label == 1
        stack.append((node.left, rows[left]))
        stack.append((node.right, rows[~left]))

    return total / count, grad / count


def _check_pair(tree: TlmTree, net: FeatureNet, data: Dataset):
    if net.dim != tree.dim or data.dim != tree.dim:
        raise DataError(f"Dimension mismatch: tree {tree.dim}, net {net.dim}, data {data.dim}")


def joint_loss(tree: TlmTree, net: FeatureNet, data: Dataset) -> float:
    """Mean of all path BCE and squared-error terms, features through the net in evaluation mode"""
    _check_pair(tree, net, data)
    loss, _ = _tree_loss(tree, net.transform(data.features), data.targets)
    return loss


def loss_and_gradient(
    tree: TlmTree,
    net: FeatureNet,
    batch: Dataset,
    training: bool = False,
    rng: Optional[np.random.Generator] = None,
) -> Tuple[float, List[np.ndarray]]:
    _check_pair(tree, net, batch)
    if training and rng is None:
        rng = np.random.default_rng(0)
    transformed, cache = _forward_batch(net, batch.features, training, rng)
    loss, grad_features = _tree_loss(tree, transformed, batch.targets)
    return loss, _backward_batch(net, cache, grad_features)


def gradient(tree: TlmTree, net: FeatureNet, batch: Dataset) -> List[np.ndarray]:
    """Exact gradient of joint_loss (dropout off), laid out like net.parameters()"""
    _, grads = loss_and_gradient(tree, net, batch)
    return grads


def train_features(
    tree: TlmTree,
    data: Dataset,
    cfg: TrainConfig,
    net: Optional[FeatureNet] = None,
) -> FeatureNet:
    """
    Minibatch gradient descent on the joint loss; the tree is only read

    Args:
        tree: Frozen trained tree
        data: Training rows
        cfg: learning_rate, epochs, batch_size, seed, dropout_enabled
        net: Starting network (default: fresh near-identity initialisation)

    Returns:
        FeatureNet: trained network with loss_curve[0] the initial loss and one
        full-data loss per epoch after it
    """
    net = FeatureNet.initialise(tree.dim, seed=cfg.seed) if net is None else net.copy()
    _check_pair(tree, net, data)
    rng = np.random.default_rng(cfg.seed)

    curve = [joint_loss(tree, net, data)]
    logger.info(f"Feature optimisation: {cfg.epochs} epochs, initial loss {curve[0]:.6g}")

    for epoch in range(1, cfg.epochs + 1):
        order = rng.permutation(data.size)
        for start in range(0, data.size, cfg.batch_size):
            batch = data.subset(order[start:start + cfg.batch_size])
            _, grads = loss_and_gradient(tree, net, batch, training=cfg.dropout_enabled, rng=rng)
            for param, grad in zip(net.parameters(), grads):
                param -= cfg.learning_rate * grad

        loss = joint_loss(tree, net, data)
        if not np.isfinite(loss):
            raise NumericError(f"Feature optimisation diverged at epoch {epoch} (loss {loss})")
        curve.append(loss)
        logger.debug(f"Epoch {epoch}/{cfg.epochs}: loss {loss:.6g}")

    net.loss_curve = curve
    logger.info(f"Feature optimisation finished: loss {curve[0]:.6g} -> {curve[-1]:.6g}")
    return net
