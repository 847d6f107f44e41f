"""
Shared fixtures: the project directory goes on sys.path so tests import `src.*`
"""

import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), "..")))

from src.config import FitConfig, TreeConfig
from src.preprocessing.dataset import Dataset
from src.preprocessing.synthetic import SyntheticSpec, generate_synthetic


def quadrant_spec() -> SyntheticSpec:
    """
    Four cells cut by |f0| >= 1 and |f1| >= 1 on [-10, 10]^2 (points in the
    margins are rejected) with offsets 0, 20, 200, 220: the y-ranges are
    disjoint and only {f0 < 0} vs {f0 > 0} separates them at the root.
    """
    return SyntheticSpec.model_validate({
        "box": [[-10.0, 10.0]],
        "hyperplanes": [
            {"w": [1.0, 0.0], "c": 1.0},
            {"w": [1.0, 0.0], "c": -1.0},
            {"w": [0.0, 1.0], "c": 1.0},
            {"w": [0.0, 1.0], "c": -1.0},
        ],
        "cells": [
            {"signs": [-1, 0, -1, 0], "r": [0.5, 0.3], "b": 0.0},
            {"signs": [-1, 0, 0, 1], "r": [0.5, 0.3], "b": 20.0},
            {"signs": [0, 1, -1, 0], "r": [-0.4, 0.2], "b": 200.0},
            {"signs": [0, 1, 0, 1], "r": [0.3, -0.5], "b": 220.0},
        ],
    })


def two_cell_spec(dim: int, offset: float = 10.0) -> SyntheticSpec:
    """Two cells split at f0 = 0 with a margin of 0.1 and a y-gap of `offset`"""
    normal = [1.0] + [0.0] * (dim - 1)
    rng = np.random.default_rng(dim)
    return SyntheticSpec.model_validate({
        "hyperplanes": [{"w": normal, "c": 0.1}, {"w": normal, "c": -0.1}],
        "cells": [
            {"signs": [-1, 0], "r": rng.uniform(-1, 1, dim).tolist(), "b": 0.0},
            {"signs": [0, 1], "r": rng.uniform(-1, 1, dim).tolist(), "b": offset},
        ],
    })


def random_spec(dim: int, seed: int) -> SyntheticSpec:
    """Two random hyperplanes through the origin and one random affine law per quadrant"""
    rng = np.random.default_rng(seed)
    planes = [{"w": rng.normal(size=dim).tolist(), "c": 0.0} for _ in range(2)]
    cells = [
        {"signs": [a, b], "r": rng.normal(size=dim).tolist(), "b": float(rng.uniform(-5, 5))}
        for a in (-1, 1) for b in (-1, 1)
    ]
    return SyntheticSpec.model_validate({"hyperplanes": planes, "cells": cells})


def sharp_tree_config(max_depth: int = 2) -> TreeConfig:
    """Unregularised classifiers so separable splits saturate"""
    return TreeConfig(max_depth=max_depth, min_leaf=20, fit=FitConfig(logit_l2=0.0, max_iters=1000))


@pytest.fixture
def quadrant_data():
    return generate_synthetic(quadrant_spec(), n=2000, noise_sd=0.0, seed=11)


@pytest.fixture
def quadrant_test_data():
    return generate_synthetic(quadrant_spec(), n=1000, noise_sd=0.0, seed=12)


@pytest.fixture
def two_segment_data():
    """1-D: y = f on [0, 1] and y = f + 10 on [2, 3]"""
    left = np.linspace(0.0, 1.0, 50)
    right = np.linspace(2.0, 3.0, 50)
    features = np.concatenate([left, right]).reshape(-1, 1)
    targets = np.concatenate([left, right + 10.0])
    return Dataset(features, targets)


@pytest.fixture
def noisy_data():
    """Random piecewise-linear data with noise, d = 4"""
    return generate_synthetic(random_spec(4, seed=3), n=400, noise_sd=0.3, seed=5)


@pytest.fixture
def small_config():
    return TreeConfig(max_depth=3, min_leaf=10, n_thresholds=7, fit=FitConfig(max_iters=200))
