import numpy as np
import pytest

from src.errors import DataError
from src.preprocessing.dataset import Dataset, load_csv, read_feature_table, split


class TestDataset:
    def test_shapes_and_size(self):
        data = Dataset(np.zeros((3, 2)), [1.0, 2.0, 3.0])
        assert data.size == 3
        assert data.dim == 2
        assert len(data) == 3

    def test_one_dimensional_features_become_a_column(self):
        data = Dataset([1.0, 2.0], [3.0, 4.0])
        assert data.features.shape == (2, 1)

    def test_row_mismatch(self):
        with pytest.raises(DataError):
            Dataset(np.zeros((3, 2)), [1.0, 2.0])

    def test_non_finite_rejected(self):
        with pytest.raises(DataError):
            Dataset([[np.nan]], [1.0])
        with pytest.raises(DataError):
            Dataset([[1.0]], [np.inf])

    def test_empty_rejected(self):
        with pytest.raises(DataError):
            Dataset(np.zeros((0, 2)), np.zeros(0))

    def test_arrays_are_read_only_copies(self):
        features = np.ones((2, 2))
        data = Dataset(features, [0.0, 1.0])
        features[0, 0] = 5.0
        assert data.features[0, 0] == 1.0
        with pytest.raises(ValueError):
            data.features[0, 0] = 2.0

    def test_subset_keeps_order(self):
        data = Dataset(np.arange(4.0).reshape(-1, 1), [10.0, 11.0, 12.0, 13.0])
        assert data.subset([2, 0]).targets.tolist() == [12.0, 10.0]
        assert data.subset(np.array([True, False, False, True])).targets.tolist() == [10.0, 13.0]


class TestLoadCsv:
    def test_direct_parse(self, tmp_path):
        path = tmp_path / "data.csv"
        path.write_text("f0,f1,y\n0,1,20\n1,0,30\n")
        data = load_csv(path)
        assert data.size == 2
        assert data.dim == 2
        np.testing.assert_array_equal(data.targets, [20.0, 30.0])
        np.testing.assert_array_equal(data.features, [[0.0, 1.0], [1.0, 0.0]])

    def test_target_column_anywhere(self, tmp_path):
        path = tmp_path / "data.csv"
        path.write_text("age,a,b\n40,1,2\n")
        data = load_csv(path, target_column="age")
        np.testing.assert_array_equal(data.features, [[1.0, 2.0]])
        np.testing.assert_array_equal(data.targets, [40.0])

    def test_non_numeric_cell_names_row(self, tmp_path):
        path = tmp_path / "data.csv"
        path.write_text("f0,f1,y\nabc,1,20\n")
        with pytest.raises(DataError, match="row 1"):
            load_csv(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(DataError, match="not found"):
            load_csv(tmp_path / "absent.csv")

    def test_missing_target_column(self, tmp_path):
        path = tmp_path / "data.csv"
        path.write_text("f0,f1\n1,2\n")
        with pytest.raises(DataError, match="Target column"):
            load_csv(path)

    def test_empty_file(self, tmp_path):
        path = tmp_path / "data.csv"
        path.write_text("")
        with pytest.raises(DataError):
            load_csv(path)

    def test_header_only(self, tmp_path):
        path = tmp_path / "data.csv"
        path.write_text("f0,y\n")
        with pytest.raises(DataError):
            load_csv(path)

    def test_optional_target(self, tmp_path):
        path = tmp_path / "data.csv"
        path.write_text("f0,f1\n1,2\n3,4\n")
        features, targets, columns = read_feature_table(path, require_target=False)
        assert targets is None
        assert columns == ["f0", "f1"]
        assert features.shape == (2, 2)


class TestSplit:
    def test_sizes(self):
        data = Dataset(np.arange(10.0).reshape(-1, 1), np.arange(10.0))
        train, test = split(data, 0.8, seed=0)
        assert (train.size, test.size) == (8, 2)

    def test_partition(self):
        data = Dataset(np.arange(10.0).reshape(-1, 1), np.arange(10.0))
        train, test = split(data, 0.7, seed=4)
        union = np.sort(np.concatenate([train.targets, test.targets]))
        np.testing.assert_array_equal(union, data.targets)

    def test_seeds_permute_differently(self):
        data = Dataset(np.arange(20.0).reshape(-1, 1), np.arange(20.0))
        first, _ = split(data, 0.5, seed=1)
        second, _ = split(data, 0.5, seed=2)
        assert first.size == second.size
        assert set(first.targets) != set(second.targets)

    def test_deterministic(self):
        data = Dataset(np.arange(20.0).reshape(-1, 1), np.arange(20.0))
        np.testing.assert_array_equal(split(data, 0.5, 3)[0].targets, split(data, 0.5, 3)[0].targets)

    def test_empty_side(self):
        data = Dataset([[0.0], [1.0]], [0.0, 1.0])
        with pytest.raises(DataError):
            split(data, 0.1, seed=0)
