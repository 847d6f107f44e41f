"""
End-to-end properties of trained models on synthetic tessellations
"""

import os

import numpy as np
import pytest

from conftest import random_spec, sharp_tree_config, two_cell_spec
from src.config import FitConfig, RunConfig, TrainConfig, TreeConfig
from src.models.baselines import fit_mean, init_mlp, mlp_gradient, mlp_loss
from src.models.feature_net import FeatureNet, gradient, joint_loss, train_features
from src.models.linear import fit_regressor
from src.models.routing import route_hard, route_oracle, route_soft
from src.models.tlm_model import TlmModel, train_model
from src.models.tree import build_tree, leaf_cells, training_sse_by_depth
from src.preprocessing.dataset import Dataset, load_csv
from src.preprocessing.synthetic import generate_synthetic
from src.utils.metrics import compute_metrics
from src.utils.serialization import to_model_file


class TestOracleRecovery:
    @pytest.fixture
    def tree(self, quadrant_data):
        return build_tree(quadrant_data, sharp_tree_config(max_depth=2))

    def test_training_mse(self, tree, quadrant_data):
        assert training_sse_by_depth(tree)[-1] / quadrant_data.size < 1e-6
        hard, _ = route_hard(tree, quadrant_data.features)
        assert np.mean((hard - quadrant_data.targets) ** 2) < 1e-6

    def test_held_out_error(self, tree, quadrant_test_data):
        X, y = quadrant_test_data.features, quadrant_test_data.targets
        hard, _ = route_hard(tree, X)
        oracle, _ = route_oracle(tree, X, y)
        soft = route_soft(tree, X, "leaves")
        assert np.mean((hard - y) ** 2) < 1e-4
        for predictions in (hard, soft, oracle):
            assert compute_metrics(predictions, y).mae < 0.01


class TestLeastSquares:
    @pytest.mark.parametrize("lam", [0.0, 0.1])
    def test_normal_equation_oracle(self, lam):
        rng = np.random.default_rng(100)
        for _ in range(100):
            features = rng.normal(size=(50, 5))
            targets = features @ rng.normal(size=5) + rng.normal(size=50)
            model = fit_regressor(Dataset(features, targets), FitConfig(ridge_lambda=lam))

            xc = features - features.mean(axis=0)
            r = np.linalg.solve(xc.T @ xc + lam * np.eye(5), xc.T @ (targets - targets.mean()))
            np.testing.assert_allclose(model.r, r, rtol=1e-8, atol=1e-12)


class TestSoftRoutingContract:
    @pytest.mark.parametrize("seed", range(3))
    def test_soft_between_path_predictions(self, seed):
        data = generate_synthetic(random_spec(3, seed), n=300, noise_sd=0.3, seed=seed)
        tree = build_tree(data, TreeConfig(max_depth=3, min_leaf=15, n_thresholds=5))
        points = np.random.default_rng(seed).uniform(-1, 1, size=(1000, 3))
        soft = route_soft(tree, points, "path")

        for f, value in zip(points, soft):
            node, path_predictions = tree.root, []
            while True:
                path_predictions.append(node.regressor.predict(f)[0])
                if node.is_leaf:
                    break
                node = node.left if node.classifier.goes_left(f)[0] else node.right
            assert min(path_predictions) - 1e-9 <= value <= max(path_predictions) + 1e-9

    def test_depth_zero_soft_is_hard(self, noisy_data):
        tree = build_tree(noisy_data, TreeConfig(max_depth=0))
        points = np.random.default_rng(0).normal(size=(1000, noisy_data.dim))
        hard, _ = route_hard(tree, points)
        for strategy in ("path", "full", "leaves"):
            np.testing.assert_array_equal(route_soft(tree, points, strategy), hard)


class TestConvexity:
    @pytest.mark.parametrize("seed", range(3))
    def test_each_point_in_exactly_its_leaf(self, seed):
        data = generate_synthetic(random_spec(2, seed), n=400, noise_sd=0.2, seed=seed)
        tree = build_tree(data, TreeConfig(max_depth=3, min_leaf=15, n_thresholds=5))
        points = np.random.default_rng(seed).uniform(-1.5, 1.5, size=(1000, 2))
        _, leaf_ids = route_hard(tree, points)
        cells = leaf_cells(tree)
        membership = np.column_stack([cell.contains(points) for cell in cells])
        np.testing.assert_array_equal(membership.sum(axis=1), 1)
        np.testing.assert_array_equal(np.array([c.leaf_id for c in cells])[membership.argmax(axis=1)], leaf_ids)

    def test_segments_stay_in_their_cell(self, noisy_data, small_config):
        tree = build_tree(noisy_data, small_config)
        rng = np.random.default_rng(1)
        a, b = rng.normal(size=(2, 2000, noisy_data.dim))
        _, ids_a = route_hard(tree, a)
        _, ids_b = route_hard(tree, b)
        same = ids_a == ids_b
        lam = rng.uniform(size=(same.sum(), 1))
        _, ids_mid = route_hard(tree, lam * a[same] + (1 - lam) * b[same])
        np.testing.assert_array_equal(ids_mid, ids_a[same])


def _central_differences(params, loss, h):
    numeric = []
    for param in params:
        grad = np.zeros_like(param)
        for index in np.ndindex(param.shape):
            original = param[index]
            param[index] = original + h
            plus = loss()
            param[index] = original - h
            minus = loss()
            param[index] = original
            grad[index] = (plus - minus) / (2 * h)
        numeric.append(grad)
    return numeric


def _max_relative_error(analytic, numeric):
    scale = max(max(float(np.max(np.abs(g))) for g in analytic), 1e-8)
    return max(float(np.max(np.abs(a - n))) for a, n in zip(analytic, numeric)) / scale


class TestGradientFidelity:
    @pytest.mark.parametrize("seed", range(10))
    def test_feature_net(self, seed):
        data = generate_synthetic(random_spec(4, seed + 50), n=16, noise_sd=0.1, seed=seed)
        tree = build_tree(data, TreeConfig(max_depth=1, min_leaf=4, n_thresholds=3))
        net = FeatureNet.initialise(4, seed=seed, init_scale=1.0)
        analytic = gradient(tree, net, data)
        numeric = _central_differences(net.parameters(), lambda: joint_loss(tree, net, data), 1e-5)
        assert _max_relative_error(analytic, numeric) < 1e-4

    @pytest.mark.parametrize("seed", range(10))
    def test_mlp(self, seed):
        data = generate_synthetic(random_spec(4, seed + 50), n=16, noise_sd=0.1, seed=seed)
        model = init_mlp(data, (6,), seed)
        rng = np.random.default_rng(seed)
        for param in model.parameters():
            param[...] = rng.normal(scale=0.5, size=param.shape)
        analytic = mlp_gradient(model, data)
        numeric = _central_differences(model.parameters(), lambda: mlp_loss(model, data), 1e-5)
        assert _max_relative_error(analytic, numeric) < 1e-4


class TestFrozenTree:
    def test_serialization_unchanged_by_feature_training(self, noisy_data, small_config):
        tree = build_tree(noisy_data, small_config)
        before = to_model_file(TlmModel(tree)).model_dump_json()
        train_features(tree, noisy_data.subset(np.arange(100)), TrainConfig(epochs=50, batch_size=32))
        assert to_model_file(TlmModel(tree)).model_dump_json() == before


class TestBaselineOrderings:
    @pytest.mark.parametrize("seed", range(10))
    def test_table_structure(self, seed):
        spec = two_cell_spec(2 + seed % 4, offset=8.0 + seed)
        data = generate_synthetic(spec, n=400, noise_sd=0.2, seed=seed)
        model, _ = train_model(data, RunConfig(max_depth=3, n_thresholds=7, seed=seed))

        def mae(predictions):
            return compute_metrics(predictions, data.targets).mae

        linear = mae(fit_regressor(data, FitConfig()).predict(data.features))
        mean = mae(fit_mean(data).predict(data.features))
        hard = mae(model.predict(data, "hard").predictions)
        oracle = mae(model.predict(data, "oracle").predictions)
        assert hard <= linear
        assert oracle <= hard
        assert mean >= linear


TIMIT_TRAIN = os.getenv("TLM_TIMIT_TRAIN_CSV")
TIMIT_TEST = os.getenv("TLM_TIMIT_TEST_CSV")


@pytest.mark.skipif(not (TIMIT_TRAIN and TIMIT_TEST), reason="speaker embedding CSVs not supplied")
class TestSpeakerAgeReproduction:
    """Reference MAE values for 192-d speaker embeddings of the TIMIT test speakers"""

    TOLERANCE = 0.15

    @pytest.fixture(scope="class")
    def splits(self):
        return load_csv(TIMIT_TRAIN), load_csv(TIMIT_TEST)

    def test_common_sense(self, splits):
        train, test = splits
        mae = compute_metrics(fit_mean(train).predict(test.features), test.targets).mae
        assert mae == pytest.approx(5.55, abs=self.TOLERANCE)

    def test_tlm_routing(self, splits):
        train, test = splits
        model, _ = train_model(train, RunConfig(mixup=True))
        assert model.predict(test, "hard").metrics.mae == pytest.approx(4.09, abs=self.TOLERANCE)
        assert model.predict(test, "soft").metrics.mae == pytest.approx(4.02, abs=self.TOLERANCE)

    def test_feature_optimisation(self, splits):
        train, test = splits
        model, _ = train_model(train, RunConfig(mixup=True, feature_opt=True))
        assert model.predict(test, "hard").metrics.mae == pytest.approx(3.97, abs=self.TOLERANCE)
