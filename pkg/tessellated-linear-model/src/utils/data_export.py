"""
Data export: predictions, metrics, loss curves, tessellation grids and reports
"""

import json
import logging
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from ..config import AppConfig
from ..errors import DataError

logger = logging.getLogger(__name__)


class DataExporter:
    """Writes run artifacts as CSV (pandas) or JSON"""

    def __init__(self, delimiter: str = None, json_indent: int = None):
        self.delimiter = delimiter or AppConfig.csv_delimiter
        self.json_indent = json_indent if json_indent is not None else AppConfig.json_indent

    @staticmethod
    def _prepare(path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        return path

    def export_frame(self, frame: pd.DataFrame, path) -> str:
        """
        Export a table to CSV

        Args:
            frame: Table to write (index dropped)
            path: Output file

        Returns:
            str: Path to exported file
        """
        try:
            filepath = self._prepare(path)
            frame.to_csv(filepath, index=False, sep=self.delimiter)
        except OSError as e:
            logger.error(f"Failed to export CSV to {path}: {e}")
            raise DataError(f"Could not write {path}: {e}") from e

        logger.info(f"Exported {len(frame)} rows to CSV: {filepath}")
        return str(filepath)

    def export_json(self, document: Dict, path) -> str:
        try:
            filepath = self._prepare(path)
            with open(filepath, "w", encoding="utf-8") as jsonfile:
                json.dump(document, jsonfile, indent=self.json_indent, ensure_ascii=False)
                jsonfile.write("\n")
        except (OSError, TypeError, ValueError) as e:
            logger.error(f"Failed to export JSON to {path}: {e}")
            raise DataError(f"Could not write {path}: {e}") from e

        logger.info(f"Exported JSON to {filepath}")
        return str(filepath)

    def export_predictions(
        self,
        path,
        predictions: np.ndarray,
        leaf_ids: np.ndarray,
        targets: Optional[np.ndarray] = None,
    ) -> str:
        """Columns: row, y_true (when targets are known), y_pred, leaf_id"""
        frame = pd.DataFrame({"row": np.arange(len(predictions))})
        if targets is not None:
            frame["y_true"] = np.asarray(targets, dtype=np.float64)
        frame["y_pred"] = np.asarray(predictions, dtype=np.float64)
        frame["leaf_id"] = np.asarray(leaf_ids, dtype=np.int64)
        return self.export_frame(frame, path)

    def export_loss_curve(self, path, curve: Sequence[float]) -> str:
        """Columns: epoch (0 = before training), loss"""
        frame = pd.DataFrame({"epoch": np.arange(len(curve)), "loss": np.asarray(curve, dtype=np.float64)})
        return self.export_frame(frame, path)

    def export_grid(self, path, rows: List[Dict]) -> str:
        """Tessellation grid rows: depth, x1, x2, leaf_id, prediction"""
        if not rows:
            raise DataError("Tessellation grid is empty")
        frame = pd.DataFrame(rows, columns=["depth", "x1", "x2", "leaf_id", "prediction"])
        return self.export_frame(frame, path)
