"""
Deterministic synthetic data drawn from a known tessellation

The generator realises exactly the model class the tree learns: hyperplanes cut
a sampling box into cells and each cell carries its own affine law.
"""

import json
import logging
from pathlib import Path
from typing import List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, ValidationError, model_validator

from ..errors import ConfigError, DataError
from .dataset import Dataset

logger = logging.getLogger(__name__)

REJECTION_BUDGET = 100


class Hyperplane(BaseModel):
    """Boundary {f : w . f + c = 0}"""
    model_config = ConfigDict(extra="forbid")

    w: List[float]
    c: float = 0.0


class CellLaw(BaseModel):
    """A cell (one sign per hyperplane: +1, -1 or 0 for unconstrained) and its affine law"""
    model_config = ConfigDict(extra="forbid")

    signs: List[int]
    r: List[float]
    b: float = 0.0


class SyntheticSpec(BaseModel):
    """Tessellation description: {box, hyperplanes: [{w, c}], cells: [{signs, r, b}]}"""
    model_config = ConfigDict(extra="forbid")

    box: List[List[float]] = [[-1.0, 1.0]]
    hyperplanes: List[Hyperplane] = []
    cells: List[CellLaw]

    @model_validator(mode="after")
    def _check_shapes(self) -> "SyntheticSpec":
        if not self.cells:
            raise ValueError("spec needs at least one cell")
        dim = len(self.cells[0].r)
        if dim < 1:
            raise ValueError("cell coefficient vectors must be non-empty")
        for plane in self.hyperplanes:
            if len(plane.w) != dim:
                raise ValueError(f"hyperplane normal has length {len(plane.w)}, expected {dim}")
        for cell in self.cells:
            if len(cell.r) != dim:
                raise ValueError(f"cell coefficients have length {len(cell.r)}, expected {dim}")
            if len(cell.signs) != len(self.hyperplanes):
                raise ValueError("each cell needs one sign per hyperplane")
            if any(s not in (-1, 0, 1) for s in cell.signs):
                raise ValueError("cell signs must be -1, 0 or +1")
        if len(self.box) not in (1, dim):
            raise ValueError(f"box must hold 1 or {dim} [lo, hi] pairs")
        for pair in self.box:
            if len(pair) != 2 or not pair[0] < pair[1]:
                raise ValueError(f"invalid box interval {pair}")
        values = [v for plane in self.hyperplanes for v in plane.w + [plane.c]]
        values += [v for cell in self.cells for v in cell.r + [cell.b]]
        if not np.all(np.isfinite(values)):
            raise ValueError("spec contains non-finite numbers")
        return self

    @property
    def dim(self) -> int:
        return len(self.cells[0].r)

    def bounds(self) -> Tuple[np.ndarray, np.ndarray]:
        box = np.asarray(self.box, dtype=np.float64)
        box = np.broadcast_to(box, (self.dim, 2)) if box.shape[0] == 1 else box
        return box[:, 0].copy(), box[:, 1].copy()

    def evaluate(self, features: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """
        Oracle evaluation of the generating law

        Returns:
            Tuple of (cell index per row, -1 where no cell matches; noiseless y)
        """
        features = np.atleast_2d(np.asarray(features, dtype=np.float64))
        if self.hyperplanes:
            normals = np.asarray([plane.w for plane in self.hyperplanes])
            offsets = np.asarray([plane.c for plane in self.hyperplanes])
            sides = np.where(features @ normals.T + offsets >= 0, 1, -1)
        else:
            sides = np.empty((features.shape[0], 0), dtype=int)

        cell_index = np.full(features.shape[0], -1, dtype=np.int64)
        y = np.zeros(features.shape[0])
        for k, cell in enumerate(self.cells):
            signs = np.asarray(cell.signs)
            constrained = signs != 0
            match = np.all(sides[:, constrained] == signs[constrained], axis=1) & (cell_index < 0)
            cell_index[match] = k
            y[match] = features[match] @ np.asarray(cell.r) + cell.b
        return cell_index, y


def load_spec(path) -> SyntheticSpec:
    """Read a synthetic tessellation spec from JSON"""
    path = Path(path)
    if not path.exists():
        raise DataError(f"Spec file not found: {path}")
    try:
        return SyntheticSpec.model_validate(json.loads(path.read_text(encoding="utf-8")))
    except (json.JSONDecodeError, ValidationError) as e:
        raise ConfigError(f"Invalid synthetic spec {path}: {e}") from e


def generate_synthetic(spec: SyntheticSpec, n: int, noise_sd: float, seed: int) -> Dataset:
    """
    Sample n rows uniformly over the spec's box and label them by their cell's law

    Args:
        spec: Tessellation and per-cell affine laws
        n: Number of rows
        noise_sd: Standard deviation of additive Gaussian noise
        seed: RNG seed; identical seeds give bitwise identical datasets

    Returns:
        Dataset: rows in draw order
    """
    if not isinstance(spec, SyntheticSpec):
        try:
            spec = SyntheticSpec.model_validate(spec)
        except ValidationError as e:
            raise ConfigError(f"Invalid synthetic spec: {e}") from e
    if n < 1:
        raise DataError(f"n must be >= 1, got {n}")
    if noise_sd < 0:
        raise DataError(f"noise_sd must be >= 0, got {noise_sd}")

    rng = np.random.default_rng(seed)
    lo, hi = spec.bounds()
    budget = REJECTION_BUDGET * n

    rows, targets = [], []
    hits = np.zeros(len(spec.cells), dtype=np.int64)
    n_accepted = n_drawn = 0
    # draw in chunks of n until n rows are accepted and every cell has been hit
    while n_drawn < budget and (n_accepted < n or not hits.all()):
        draws = rng.uniform(lo, hi, size=(n, spec.dim))
        n_drawn += n
        cell_index, y = spec.evaluate(draws)
        inside = cell_index >= 0
        hits += np.bincount(cell_index[inside], minlength=len(spec.cells))
        rows.append(draws[inside])
        targets.append(y[inside])
        n_accepted += int(inside.sum())

    empty = np.flatnonzero(hits == 0)
    if empty.size:
        raise DataError(f"Cell(s) {empty.tolist()} received no samples in {n_drawn} draws")
    if n_accepted < n:
        raise DataError(f"Only {n_accepted} of {n_drawn} draws fell in a cell; need {n}")

    features = np.vstack(rows)[:n]
    y = np.concatenate(targets)[:n]
    if noise_sd > 0:
        y = y + rng.normal(0.0, noise_sd, size=n)

    logger.debug(f"Generated {n} synthetic rows over {len(spec.cells)} cells "
                 f"({n_accepted}/{n_drawn} draws accepted)")
    return Dataset(features, y)
