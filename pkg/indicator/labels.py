from dataclasses import dataclass
from typing import Iterable

import numpy as np

from trajcore.errors import ArgumentError


def _check_indices(indices, n: int):
    indices = sorted(set(int(i) for i in indices))
    for i in indices:
        if not 1 <= i <= n - 1:
            raise ArgumentError(f"change index {i} outside [1, {n - 1}]")
    return indices


def distance_to_indices(indices: Iterable[int], n: int) -> np.ndarray:
    """Per-timestep distance to the nearest index; inf when there are none."""
    indices = np.asarray(sorted(indices), dtype=np.float64)
    t = np.arange(n, dtype=np.float64)
    if indices.size == 0:
        return np.full(n, np.inf)
    return np.min(np.abs(t[:, None] - indices[None, :]), axis=1)


@dataclass(frozen=True, eq=False)
class IndicatorLabels:
    """Binary targets at change indices, down-weighted loss near them."""

    targets: np.ndarray
    weights: np.ndarray
    window: int
    w_low: float

    def __len__(self) -> int:
        return self.targets.shape[0]


def build_labels(indices: Iterable[int], n: int, window: int = 3,
                 w_low: float = 0.2) -> IndicatorLabels:
    if window < 0:
        raise ArgumentError(f"window must be non-negative, got {window}")
    if not 0.0 < w_low <= 1.0:
        raise ArgumentError(f"w_low must lie in (0, 1], got {w_low}")
    indices = _check_indices(indices, n)
    targets = np.zeros(n)
    targets[indices] = 1.0
    dist = distance_to_indices(indices, n)
    weights = np.where((dist > 0) & (dist <= window), w_low, 1.0)
    return IndicatorLabels(targets, weights, window, w_low)
