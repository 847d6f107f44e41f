"""Preprocessing module: datasets, mixup augmentation and synthetic tessellations"""

from .dataset import Dataset, load_csv, read_feature_table, split
from .augmentation import MixupPlan, mix_pair, mixup_augment, mixup_pairs
from .synthetic import SyntheticSpec, generate_synthetic, load_spec

__all__ = [
    'Dataset',
    'load_csv',
    'read_feature_table',
    'split',
    'MixupPlan',
    'mix_pair',
    'mixup_augment',
    'mixup_pairs',
    'SyntheticSpec',
    'generate_synthetic',
    'load_spec',
]
