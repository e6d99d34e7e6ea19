"""Scalar losses returning (value, gradient w.r.t. the prediction)."""
from typing import Optional, Tuple

import numpy as np
from scipy.special import expit

from trajcore.errors import ArgumentError

_PROB_EPS = 1e-12


def mse_loss(pred: np.ndarray, target: np.ndarray) -> Tuple[float, np.ndarray]:
    """Mean of squared errors over every element."""
    if pred.shape != target.shape:
        raise ArgumentError(f"MSE shape mismatch: {pred.shape} vs {target.shape}")
    diff = pred - target
    return float(np.mean(diff ** 2)), 2.0 * diff / diff.size


def _normalizer(weights: np.ndarray, normalizer: Optional[float]) -> float:
    if normalizer is None:
        normalizer = float(np.count_nonzero(weights))
    return max(normalizer, 1.0)


def weighted_bce_loss(prob: np.ndarray, target: np.ndarray, weights: np.ndarray,
                      normalizer: Optional[float] = None) -> Tuple[float, np.ndarray]:
    """
    sum_t w_t * BCE(p_t, y_t) / normalizer, on probabilities.

    The normalizer defaults to the number of nonzero weights so padded
    timesteps (weight 0) neither count nor receive gradient.
    """
    if not (prob.shape == target.shape == weights.shape):
        raise ArgumentError("BCE inputs must share one shape")
    n = _normalizer(weights, normalizer)
    p = np.clip(prob, _PROB_EPS, 1.0 - _PROB_EPS)
    loss = -(target * np.log(p) + (1.0 - target) * np.log(1.0 - p))
    grad = weights * (p - target) / (p * (1.0 - p)) / n
    return float(np.sum(weights * loss) / n), grad


def weighted_bce_with_logits(logits: np.ndarray, target: np.ndarray, weights: np.ndarray,
                             normalizer: Optional[float] = None) -> Tuple[float, np.ndarray]:
    """Same loss as weighted_bce_loss(sigmoid(z)) with the sigmoid folded in for stability."""
    if not (logits.shape == target.shape == weights.shape):
        raise ArgumentError("BCE inputs must share one shape")
    n = _normalizer(weights, normalizer)
    # softplus(z) - y z
    loss = np.logaddexp(0.0, logits) - target * logits
    grad = weights * (expit(logits) - target) / n
    return float(np.sum(weights * loss) / n), grad
