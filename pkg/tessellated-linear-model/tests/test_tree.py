from dataclasses import replace

import numpy as np
import pytest

from conftest import quadrant_spec, random_spec, sharp_tree_config
from src.config import FitConfig, MixupConfig, TreeConfig
from src.errors import DataError
from src.models.linear import fit_regressor
from src.models.routing import route_hard
from src.models.tree import (
    build_tree,
    candidate_thresholds,
    child_ids,
    evaluate_split,
    leaf_cells,
    training_sse_by_depth,
)
from src.preprocessing.dataset import Dataset
from src.preprocessing.synthetic import generate_synthetic

EXACT = FitConfig(ridge_lambda=0.0)


def _sse(regressor, data):
    residuals = data.targets - regressor.predict(data.features)
    return float(residuals @ residuals)


class TestCandidateThresholds:
    def test_interior_quantiles(self):
        targets = np.arange(20.0, 59.0)
        thresholds = candidate_thresholds(targets, TreeConfig(n_thresholds=3, min_leaf=1))
        assert thresholds.size == 3
        assert np.all((thresholds > 20) & (thresholds < 58))
        assert np.all(np.diff(thresholds) > 0)

    def test_pure_node(self):
        assert candidate_thresholds(np.full(50, 3.0), TreeConfig(min_leaf=1)).size == 0

    def test_min_leaf_excludes_everything(self):
        targets = np.array([10.0, 10.0, 10.0, 50.0])
        assert candidate_thresholds(targets, TreeConfig(min_leaf=2)).size == 0

    def test_every_threshold_respects_min_leaf(self):
        targets = np.random.default_rng(0).exponential(size=200)
        cfg = TreeConfig(n_thresholds=15, min_leaf=30)
        for t in candidate_thresholds(targets, cfg):
            n_left = int(np.sum(targets <= t))
            assert n_left >= 30
            assert targets.size - n_left >= 30

    def test_prefers_the_wide_gap(self, two_segment_data):
        thresholds = candidate_thresholds(two_segment_data.targets, TreeConfig(n_thresholds=15))
        assert np.any((thresholds > 1.0) & (thresholds < 12.0))

    def test_thresholds_lie_between_targets(self):
        targets = np.array([1.0, 2.0, 4.0, 8.0, 16.0, 32.0])
        values = set(targets.tolist())
        for t in candidate_thresholds(targets, TreeConfig(n_thresholds=4, min_leaf=1)):
            assert t not in values


class TestEvaluateSplit:
    def test_affine_data_gains_nothing(self):
        rng = np.random.default_rng(1)
        features = rng.normal(size=(200, 3))
        targets = features @ np.array([1.0, -2.0, 0.5]) + 3.0
        data = Dataset(features, targets)
        cfg = TreeConfig(min_leaf=10, fit=EXACT)
        for t in candidate_thresholds(targets, cfg):
            assert abs(evaluate_split(data, t, cfg).reduction) < 1e-8

    def test_two_segments(self, two_segment_data):
        cfg = TreeConfig(fit=EXACT)
        candidate = evaluate_split(two_segment_data, 5.0, cfg)
        parent_sse = _sse(fit_regressor(two_segment_data, EXACT), two_segment_data)
        assert candidate.left_sse == pytest.approx(0.0, abs=1e-10)
        assert candidate.right_sse == pytest.approx(0.0, abs=1e-10)
        assert parent_sse > 0
        assert candidate.reduction == pytest.approx(parent_sse, rel=1e-9)
        assert candidate.left_mask.sum() == 50

    def test_reduction_never_significantly_negative(self, noisy_data):
        cfg = TreeConfig(min_leaf=10, fit=EXACT)
        for t in candidate_thresholds(noisy_data.targets, cfg):
            candidate = evaluate_split(noisy_data, t, cfg)
            assert candidate.reduction >= -1e-10 * (candidate.left_sse + candidate.right_sse + 1.0)

    def test_below_min_leaf(self, two_segment_data):
        with pytest.raises(DataError, match="min_leaf"):
            evaluate_split(two_segment_data, 0.05, TreeConfig(min_leaf=20))

    def test_classifier_learns_label(self, two_segment_data):
        candidate = evaluate_split(two_segment_data, 5.0, TreeConfig())
        goes_left = candidate.classifier.goes_left(two_segment_data.features)
        np.testing.assert_array_equal(goes_left, two_segment_data.targets <= 5.0)


class TestBuildTree:
    def test_depth_zero_is_linear_regression(self, noisy_data):
        cfg = TreeConfig(max_depth=0)
        tree = build_tree(noisy_data, cfg)
        reference = fit_regressor(noisy_data, cfg.fit)
        assert tree.root.is_leaf
        assert tree.n_leaves == 1
        np.testing.assert_array_equal(tree.root.regressor.r, reference.r)
        assert tree.root.regressor.b == reference.b

    def test_two_segment_recovery(self, two_segment_data):
        tree = build_tree(two_segment_data, TreeConfig(max_depth=1, fit=EXACT))
        assert tree.depth == 1
        assert 1.0 < tree.root.threshold < 12.0
        assert training_sse_by_depth(tree)[-1] < 1e-10

        predictions, _ = route_hard(tree, two_segment_data.features)
        np.testing.assert_allclose(predictions, two_segment_data.targets, atol=1e-6)

    def test_quadrant_recovery(self, quadrant_data):
        tree = build_tree(quadrant_data, sharp_tree_config(max_depth=2))
        assert tree.n_leaves >= 3
        assert training_sse_by_depth(tree)[-1] / quadrant_data.size < 1e-6

    def test_heap_numbering(self, noisy_data, small_config):
        tree = build_tree(noisy_data, small_config)
        for node in tree.iter_nodes():
            if not node.is_leaf:
                assert (node.left.node_id, node.right.node_id) == child_ids(node.node_id)
                assert node.left.depth == node.right.depth == node.depth + 1
        assert tree.root.node_id == 0

    def test_children_respect_min_leaf(self, noisy_data, small_config):
        tree = build_tree(noisy_data, small_config)
        for node in tree.iter_nodes():
            assert node.diagnostics.n_train >= small_config.min_leaf or node is tree.root
            if not node.is_leaf:
                left_max = node.left.diagnostics.y_max
                right_min = node.right.diagnostics.y_min
                assert left_max <= node.threshold < right_min

    def test_pure_node_stays_leaf(self):
        data = Dataset(np.random.default_rng(0).normal(size=(100, 2)), np.full(100, 4.0))
        tree = build_tree(data, TreeConfig(max_depth=3))
        assert tree.n_leaves == 1

    def test_deterministic(self, noisy_data, small_config):
        first = build_tree(noisy_data, small_config)
        second = build_tree(noisy_data, small_config)
        assert [n.threshold for n in first.iter_nodes()] == [n.threshold for n in second.iter_nodes()]

    def test_thread_pool_gives_the_same_tree(self, noisy_data, small_config):
        serial = build_tree(noisy_data, small_config)
        threaded = build_tree(noisy_data, replace(small_config, n_jobs=3))
        for a, b in zip(serial.iter_nodes(), threaded.iter_nodes()):
            assert a.node_id == b.node_id
            assert a.threshold == b.threshold
            np.testing.assert_array_equal(a.regressor.r, b.regressor.r)

    def test_mixup_is_seeded(self, noisy_data):
        cfg = TreeConfig(max_depth=2, min_leaf=10, n_thresholds=5, mixup=MixupConfig(enabled=True))
        first = build_tree(noisy_data, cfg)
        second = build_tree(noisy_data, cfg)
        for a, b in zip(first.iter_nodes(), second.iter_nodes()):
            np.testing.assert_array_equal(a.regressor.r, b.regressor.r)
        # diagnostics count original rows only
        assert first.root.diagnostics.n_train == noisy_data.size

    def test_classifier_partition(self, noisy_data):
        cfg = TreeConfig(max_depth=2, min_leaf=15, n_thresholds=5, partition_by="classifier")
        tree = build_tree(noisy_data, cfg)
        for node in tree.iter_nodes():
            if not node.is_leaf:
                assert node.left.diagnostics.n_train >= 15
                assert node.right.diagnostics.n_train >= 15
        assert sum(leaf.diagnostics.n_train for leaf in tree.leaves()) == noisy_data.size

    def test_wide_feature_scales(self):
        rng = np.random.default_rng(9)
        big = rng.normal(scale=1e6, size=400)
        small = rng.uniform(-1, 1, size=400)
        features = np.column_stack([big, small, np.ones(400)])
        targets = np.where(small > 0, 5.0 * small, -small) + 1e-6 * big
        tree = build_tree(Dataset(features, targets), TreeConfig(max_depth=2))
        sse = training_sse_by_depth(tree)
        assert all(b <= a + 1e-9 for a, b in zip(sse, sse[1:]))


class TestTrainingSse:
    @pytest.mark.parametrize("seed", range(20))
    def test_non_increasing_with_depth(self, seed):
        data = generate_synthetic(random_spec(8, seed), n=500, noise_sd=0.5, seed=seed)
        cfg = TreeConfig(max_depth=4, min_leaf=20, n_thresholds=5, fit=FitConfig(max_iters=100))
        totals = training_sse_by_depth(build_tree(data, cfg))
        assert len(totals) == 5
        assert np.all(np.diff(totals) <= 1e-9 * max(totals[0], 1.0))

    def test_root_entry_is_linear_regression_sse(self, noisy_data, small_config):
        tree = build_tree(noisy_data, small_config)
        root_sse = _sse(fit_regressor(noisy_data, small_config.fit), noisy_data)
        assert training_sse_by_depth(tree)[0] == pytest.approx(root_sse)


class TestLeafCells:
    def test_depth_zero(self, noisy_data):
        cells = leaf_cells(build_tree(noisy_data, TreeConfig(max_depth=0)))
        assert len(cells) == 1
        assert cells[0].constraints == ()

    def test_depth_one_complementary(self, two_segment_data):
        cells = leaf_cells(build_tree(two_segment_data, TreeConfig(max_depth=1)))
        assert len(cells) == 2
        (left,), (right,) = cells[0].constraints, cells[1].constraints
        np.testing.assert_array_equal(left.w, right.w)
        assert left.c == right.c
        assert {left.side, right.side} == {"left", "right"}

    def test_cells_agree_with_hard_routing(self, quadrant_data):
        tree = build_tree(quadrant_data, sharp_tree_config(max_depth=2))
        points = np.random.default_rng(0).uniform(-10, 10, size=(500, 2))
        _, leaf_ids = route_hard(tree, points)
        cells = leaf_cells(tree)
        membership = np.column_stack([cell.contains(points) for cell in cells])
        np.testing.assert_array_equal(membership.sum(axis=1), 1)
        ids = np.array([cell.leaf_id for cell in cells])
        np.testing.assert_array_equal(ids[membership.argmax(axis=1)], leaf_ids)


class TestTruncated:
    def test_depth_zero_is_root(self, quadrant_data):
        tree = build_tree(quadrant_data, sharp_tree_config(max_depth=2))
        cut = tree.truncated(0)
        assert cut.n_leaves == 1
        assert cut.root.regressor is tree.root.regressor
        # original untouched
        assert not tree.root.is_leaf

    def test_depth_one(self, quadrant_data):
        tree = build_tree(quadrant_data, sharp_tree_config(max_depth=2))
        assert tree.truncated(1).n_leaves == 2
        assert tree.truncated(5).n_leaves == tree.n_leaves


def test_quadrant_spec_cells_are_disjoint_in_y():
    data = generate_synthetic(quadrant_spec(), n=400, noise_sd=0.0, seed=0)
    cells, _ = quadrant_spec().evaluate(data.features)
    ranges = sorted((data.targets[cells == k].min(), data.targets[cells == k].max()) for k in range(4))
    for (_, hi), (lo, _) in zip(ranges, ranges[1:]):
        assert hi < lo
