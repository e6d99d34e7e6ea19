"""Central finite-difference verification of analytic gradients."""
from typing import Callable, Dict, Iterable

import numpy as np

from nnkit.params import ParamGroup


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    """max |a - n| / max(1, |n|)."""
    if analytic.size == 0:
        return 0.0
    return float(np.max(np.abs(analytic - numeric) / np.maximum(1.0, np.abs(numeric))))


def numeric_gradient(f: Callable[[], float], x: np.ndarray, h: float = 1e-5) -> np.ndarray:
    """Gradient of f() w.r.t. the array x, perturbing x in place and restoring it."""
    grad = np.zeros_like(x)
    flat = x.reshape(-1)
    out = grad.reshape(-1)
    for idx in range(flat.size):
        orig = flat[idx]
        flat[idx] = orig + h
        plus = f()
        flat[idx] = orig - h
        minus = f()
        flat[idx] = orig
        out[idx] = (plus - minus) / (2.0 * h)
    return grad


def check_groups(objective: Callable[[bool], float], groups: Iterable[ParamGroup],
                 h: float = 1e-5) -> Dict[str, float]:
    """
    Compare analytic and numeric parameter gradients.

    ``objective(backward)`` returns the scalar loss and, when ``backward`` is
    true, accumulates gradients into the groups (which are zeroed first here).
    Returns the relative error per "group/param".
    """
    groups = list(groups)
    for g in groups:
        g.zero_grad()
    objective(True)
    analytic = {(g.name, k): g.grads[k].copy() for g in groups for k in g.params}
    errors = {}
    for g in groups:
        for key, param in g.params.items():
            numeric = numeric_gradient(lambda: objective(False), param, h)
            errors[f"{g.name}/{key}"] = relative_error(analytic[(g.name, key)], numeric)
    return errors


def check_input(f: Callable[[], float], x: np.ndarray, analytic: np.ndarray,
                h: float = 1e-5) -> float:
    return relative_error(analytic, numeric_gradient(f, x, h))
