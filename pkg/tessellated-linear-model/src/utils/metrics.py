"""
Regression error metrics (MAE / RMSE)
"""

from dataclasses import asdict, dataclass
from typing import Dict

import numpy as np

from ..errors import DataError


@dataclass(frozen=True)
class Metrics:
    mae: float
    rmse: float
    count: int

    def to_dict(self) -> Dict:
        return asdict(self)


def compute_metrics(predictions, targets) -> Metrics:
    """
    MAE = mean |y - y_hat|, RMSE = sqrt(mean (y - y_hat)^2)

    Args:
        predictions: Predicted values
        targets: True values, same length

    Returns:
        Metrics
    """
    predictions = np.asarray(predictions, dtype=np.float64).ravel()
    targets = np.asarray(targets, dtype=np.float64).ravel()
    if predictions.shape != targets.shape:
        raise DataError(f"Length mismatch: {predictions.size} predictions vs {targets.size} targets")
    if predictions.size == 0:
        raise DataError("Cannot compute metrics on empty input")
    if not (np.all(np.isfinite(predictions)) and np.all(np.isfinite(targets))):
        raise DataError("Metrics input contains NaN or infinite values")

    residuals = np.abs(targets - predictions)
    mae = float(np.mean(residuals))
    rmse = float(np.sqrt(np.mean(residuals ** 2)))
    # rounding can put rmse a hair under mae when all residuals are equal
    rmse = max(rmse, mae)
    return Metrics(mae=mae, rmse=rmse, count=int(predictions.size))
