"""Models module: per-node learners, the tessellation tree, routing, feature net and baselines"""

from .linear import LinearClassifier, LinearRegressor, classify, fit_classifier, fit_regressor, predict_regressor
from .tree import TlmNode, TlmTree, build_tree, candidate_thresholds, evaluate_split, leaf_cells
from .routing import predict_batch, predict_hard, predict_oracle, predict_soft
from .feature_net import FeatureNet, forward, gradient, joint_loss, train_features
from .tlm_model import TlmModel, train_model

__all__ = [
    'LinearClassifier',
    'LinearRegressor',
    'classify',
    'fit_classifier',
    'fit_regressor',
    'predict_regressor',
    'TlmNode',
    'TlmTree',
    'build_tree',
    'candidate_thresholds',
    'evaluate_split',
    'leaf_cells',
    'predict_batch',
    'predict_hard',
    'predict_oracle',
    'predict_soft',
    'FeatureNet',
    'forward',
    'gradient',
    'joint_loss',
    'train_features',
    'TlmModel',
    'train_model',
]
