"""Per-feature z-scoring with training-set statistics."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class FeatureStats:
    """Training-split means/stds; zero-variance features are dropped (their
    indices are kept on record so apply() stays aligned)."""
    mean: np.ndarray
    std: np.ndarray
    kept: np.ndarray  # indices into the raw feature vector
    dropped: tuple[int, ...]

    @classmethod
    def fit(cls, X: np.ndarray) -> "FeatureStats":
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[0] < 2:
            raise ValueError("need a 2-D sample matrix with at least 2 rows")
        mean = X.mean(axis=0)
        std = X.std(axis=0, ddof=1)
        kept = np.flatnonzero(std > 0.0)
        dropped = tuple(int(i) for i in np.flatnonzero(std == 0.0))
        if dropped:
            logger.warning("dropping %d zero-variance features: %s",
                           len(dropped), dropped)
        if kept.size == 0:
            raise ValueError("all features have zero variance")
        return cls(mean[kept], std[kept], kept, dropped)

    @property
    def dim(self) -> int:
        return int(self.kept.size)

    def apply(self, x: np.ndarray) -> np.ndarray:
        """Z-score one feature vector or a sample matrix (last axis)."""
        x = np.asarray(x, dtype=float)
        return (x[..., self.kept] - self.mean) / self.std
