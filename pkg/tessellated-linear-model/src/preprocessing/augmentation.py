"""
Age-similarity mixup: convex combinations of rows whose targets lie within a window
"""

import logging
from dataclasses import dataclass

import numpy as np

from ..config import MixupConfig
from ..errors import DataError
from .dataset import Dataset

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class MixupPlan:
    """Which rows get mixed, with whom, and by how much"""
    anchors: np.ndarray
    partners: np.ndarray
    lambdas: np.ndarray
    skipped: int


def mix_pair(f_i: np.ndarray, f_j: np.ndarray, y_i: float, y_j: float, lam: float):
    """Return (lam * f_i + (1 - lam) * f_j, lam * y_i + (1 - lam) * y_j)"""
    f_i = np.asarray(f_i, dtype=np.float64)
    f_j = np.asarray(f_j, dtype=np.float64)
    return lam * f_i + (1.0 - lam) * f_j, lam * y_i + (1.0 - lam) * y_j


def mixup_pairs(data: Dataset, cfg: MixupConfig, seed: int) -> MixupPlan:
    """
    Draw the mixing plan for floor(multiplier * n) synthetic rows

    Anchors cycle through random permutations of the rows. Each anchor's partner
    is drawn uniformly among the other rows with |y_i - y_j| <= similarity_window;
    anchors with no such partner are skipped.
    """
    if data.size < 2:
        raise DataError(f"mixup needs at least 2 rows, got {data.size}")

    n = data.size
    n_synthetic = int(np.floor(cfg.multiplier * n))
    rng = np.random.default_rng(seed)

    anchors = np.empty(0, dtype=np.int64)
    if n_synthetic:
        n_rounds = -(-n_synthetic // n)
        anchors = np.concatenate([rng.permutation(n) for _ in range(n_rounds)])[:n_synthetic]

    # rows sorted by target; eligible partners are a contiguous run
    order = np.argsort(data.targets, kind="stable")
    sorted_y = data.targets[order]
    lo = np.searchsorted(sorted_y, data.targets - cfg.similarity_window, side="left")
    hi = np.searchsorted(sorted_y, data.targets + cfg.similarity_window, side="right")

    kept_anchors, partners, lambdas = [], [], []
    skipped = 0
    for i in anchors:
        # the run always contains i itself
        n_eligible = hi[i] - lo[i] - 1
        if n_eligible <= 0:
            skipped += 1
            continue
        pick = int(rng.integers(n_eligible))
        candidates = order[lo[i]:hi[i]]
        candidates = candidates[candidates != i]
        kept_anchors.append(int(i))
        partners.append(int(candidates[pick]))
        lambdas.append(float(rng.beta(cfg.alpha, cfg.alpha)))

    if skipped:
        logger.warning(f"Mixup skipped {skipped} of {n_synthetic} anchors with no partner "
                       f"within {cfg.similarity_window}")

    return MixupPlan(
        anchors=np.asarray(kept_anchors, dtype=np.int64),
        partners=np.asarray(partners, dtype=np.int64),
        lambdas=np.asarray(lambdas, dtype=np.float64),
        skipped=skipped,
    )


def mixup_augment(data: Dataset, cfg: MixupConfig, seed: int) -> Dataset:
    """
    Append mixed rows to the original rows

    Args:
        data: Source dataset (n >= 2)
        cfg: Mixup settings
        seed: RNG seed

    Returns:
        Dataset: original rows first, verbatim, followed by the synthetic rows
    """
    plan = mixup_pairs(data, cfg, seed)
    if plan.anchors.size == 0:
        return data

    lam = plan.lambdas[:, None]
    features = lam * data.features[plan.anchors] + (1.0 - lam) * data.features[plan.partners]
    targets = plan.lambdas * data.targets[plan.anchors] + (1.0 - plan.lambdas) * data.targets[plan.partners]

    logger.debug(f"Mixup added {plan.anchors.size} rows to {data.size}")
    return Dataset(
        np.vstack([data.features, features]),
        np.concatenate([data.targets, targets]),
    )
