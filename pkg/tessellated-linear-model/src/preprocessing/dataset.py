"""
Dataset container, CSV ingestion and train/test splitting
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Tuple

import numpy as np
import pandas as pd

from ..errors import DataError

logger = logging.getLogger(__name__)


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.array(array, dtype=np.float64, copy=True)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class Dataset:
    """Rows of (feature vector, response); immutable after construction"""
    features: np.ndarray
    targets: np.ndarray

    def __post_init__(self):
        features = np.asarray(self.features, dtype=np.float64)
        targets = np.asarray(self.targets, dtype=np.float64)
        if features.ndim == 1:
            features = features.reshape(-1, 1)
        if features.ndim != 2 or targets.ndim != 1:
            raise DataError(
                f"Expected an n x d feature matrix and a length-n target vector, "
                f"got shapes {features.shape} and {targets.shape}"
            )
        if features.shape[0] != targets.shape[0]:
            raise DataError(
                f"Feature rows ({features.shape[0]}) and targets ({targets.shape[0]}) differ"
            )
        if features.shape[0] < 1 or features.shape[1] < 1:
            raise DataError(f"Dataset must have n >= 1 and d >= 1, got shape {features.shape}")
        if not (np.all(np.isfinite(features)) and np.all(np.isfinite(targets))):
            raise DataError("Dataset contains NaN or infinite values")
        object.__setattr__(self, "features", _frozen(features))
        object.__setattr__(self, "targets", _frozen(targets))

    @property
    def size(self) -> int:
        return self.features.shape[0]

    @property
    def dim(self) -> int:
        return self.features.shape[1]

    def __len__(self) -> int:
        return self.size

    def subset(self, indices) -> "Dataset":
        """Rows selected by an index array or boolean mask, in that order"""
        return Dataset(self.features[indices], self.targets[indices])

    def with_features(self, features: np.ndarray) -> "Dataset":
        """Same targets over a transformed feature matrix"""
        return Dataset(features, self.targets)


def read_feature_table(
    path, target_column: str = "y", require_target: bool = True
) -> Tuple[np.ndarray, Optional[np.ndarray], List[str]]:
    """
    Parse a feature CSV

    Args:
        path: CSV file with a header row
        target_column: Name of the response column
        require_target: Raise when the target column is absent

    Returns:
        Tuple of (features n x d, targets or None, feature column names)
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"Data file not found: {path}")

    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, encoding="utf-8")
    except pd.errors.EmptyDataError as e:
        raise DataError(f"Data file is empty: {path}") from e
    except (pd.errors.ParserError, UnicodeDecodeError) as e:
        raise DataError(f"Could not parse {path}: {e}") from e

    if frame.shape[0] == 0:
        raise DataError(f"Data file has a header but no rows: {path}")

    has_target = target_column in frame.columns
    if require_target and not has_target:
        raise DataError(f"Target column {target_column!r} not found in {path}")

    feature_columns = [column for column in frame.columns if column != target_column]
    if not feature_columns:
        raise DataError(f"No feature columns in {path}")

    numeric = {}
    for column in frame.columns:
        values = pd.to_numeric(frame[column].str.strip(), errors="coerce")
        values = values.to_numpy(dtype=np.float64, na_value=np.nan)
        bad = np.flatnonzero(~np.isfinite(values))
        if bad.size:
            row = int(bad[0])
            raise DataError(
                f"Non-numeric value {frame[column].iloc[row]!r} at row {row + 1}, "
                f"column {column!r} of {path}"
            )
        numeric[column] = values

    features = np.column_stack([numeric[column] for column in feature_columns])
    targets = numeric[target_column] if has_target else None
    return features, targets, feature_columns


def load_csv(path, target_column: str = "y") -> Dataset:
    """Load a Dataset whose features are every non-target column in file order"""
    features, targets, columns = read_feature_table(path, target_column)
    data = Dataset(features, targets)
    logger.info(f"Loaded {data.size} rows with {data.dim} features from {path}")
    return data


def split(data: Dataset, train_fraction: float, seed: int) -> Tuple[Dataset, Dataset]:
    """
    Random disjoint train/test partition

    Args:
        data: Dataset with at least two rows
        train_fraction: Share of rows in the first output, in (0, 1)
        seed: RNG seed

    Returns:
        Tuple[Dataset, Dataset]: (train, test)
    """
    if not 0 < train_fraction < 1:
        raise DataError(f"train_fraction must lie in (0, 1), got {train_fraction}")
    n_train = int(round(train_fraction * data.size))
    if n_train < 1 or n_train > data.size - 1:
        raise DataError(
            f"train_fraction {train_fraction} leaves an empty side for n={data.size}"
        )
    order = np.random.default_rng(seed).permutation(data.size)
    return data.subset(order[:n_train]), data.subset(order[n_train:])
