from typing import Iterable, Sequence

import numpy as np
from sklearn.metrics import roc_auc_score

from indicator.labels import distance_to_indices


def transition_targets(boundaries: Iterable[int], n: int, window: int) -> np.ndarray:
    """1 for timesteps within +-window of a boundary, else 0."""
    return (distance_to_indices(boundaries, n) <= window).astype(np.int64)


def transition_auc(rho_series: Sequence[np.ndarray], boundaries: Sequence[Iterable[int]],
                   window: int = 3) -> float:
    """ROC-AUC of rho for detecting timesteps near a boundary, pooled over trajectories."""
    scores, labels = [], []
    for rho, bounds in zip(rho_series, boundaries):
        rho = np.asarray(rho, dtype=np.float64)
        scores.append(rho)
        labels.append(transition_targets(bounds, rho.shape[0], window))
    labels = np.concatenate(labels)
    if labels.min() == labels.max():
        return float("nan")
    return float(roc_auc_score(labels, np.concatenate(scores)))
