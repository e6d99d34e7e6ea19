"""Finite-difference verification of every layer, loss and full model graph."""
import logging
from typing import Callable, Dict, List

import numpy as np
import pandas as pd

from indicator.model import IndicatorModel
from nnkit.gradcheck import check_groups, check_input
from nnkit.layers import LSTM, MLP, Affine, Concat, ReLU, Sigmoid, Tanh
from nnkit.losses import mse_loss, weighted_bce_loss, weighted_bce_with_logits
from nnkit.params import ParamGroup
from nnkit.rng import make_rng
from policy.config import PolicyConfig
from policy.network import VPPolicy
from trajcore.errors import ArgumentError

logger = logging.getLogger(__name__)

STEP = 1e-5
TOLERANCE = 1e-5


def _away_from_zero(rng, shape) -> np.ndarray:
    # keeps ReLU inputs clear of the kink by more than the step
    return rng.choice([-1.0, 1.0], size=shape) * rng.uniform(0.1, 1.0, size=shape)


def _projected(layer_forward, layer_backward, x, proj):
    """Objective sum(f(x) * proj) for a layer; returns (objective, analytic dx)."""
    def objective(backward: bool = False) -> float:
        y = layer_forward(x)
        if backward:
            objective.dx = layer_backward(proj)
        return float(np.sum(y * proj))
    return objective


def _check_activation(layer, rng) -> Dict[str, float]:
    x = _away_from_zero(rng, (4, 5))
    proj = rng.normal(size=(4, 5))
    layer.forward(x)
    analytic = layer.backward(proj)
    return {"input": check_input(lambda: float(np.sum(layer.forward(x) * proj)), x, analytic, STEP)}


def _check_affine(rng) -> Dict[str, float]:
    group = ParamGroup("affine", "head")
    layer = Affine(group, "affine", 3, 4, rng)
    x = rng.normal(size=(5, 3))
    proj = rng.normal(size=(5, 4))
    objective = _projected(layer.forward, layer.backward, x, proj)
    errors = check_groups(objective, [group], STEP)
    group.zero_grad()
    objective(True)
    errors["input"] = check_input(lambda: objective(False), x, objective.dx, STEP)
    return errors


def _check_concat(rng) -> Dict[str, float]:
    layer = Concat()
    a, b = rng.normal(size=(3, 2)), rng.normal(size=(3, 4))
    proj = rng.normal(size=(3, 6))
    layer.forward(a, b)
    da, db = layer.backward(proj)
    return {
        "input_a": check_input(lambda: float(np.sum(layer.forward(a, b) * proj)), a, da, STEP),
        "input_b": check_input(lambda: float(np.sum(layer.forward(a, b) * proj)), b, db, STEP),
    }


def _check_mlp(rng) -> Dict[str, float]:
    group = ParamGroup("mlp", "vision")
    net = MLP(group, "mlp", [4, 5, 3], rng, activation="tanh", final_activation="sigmoid")
    x = rng.normal(size=(6, 4))
    proj = rng.normal(size=(6, 3))
    return check_groups(_projected(net.forward, net.backward, x, proj), [group], STEP)


def _check_lstm(rng) -> Dict[str, float]:
    group = ParamGroup("lstm", "indicator")
    cell = LSTM(group, "lstm", 3, 4, rng)
    x = rng.normal(size=(2, 5, 3))
    proj = rng.normal(size=(2, 5, 4))
    objective = _projected(cell.forward, cell.backward, x, proj)
    errors = check_groups(objective, [group], STEP)
    group.zero_grad()
    objective(True)
    errors["input"] = check_input(lambda: objective(False), x, objective.dx, STEP)
    return errors


def _check_mse(rng) -> Dict[str, float]:
    pred, target = rng.normal(size=(4, 3)), rng.normal(size=(4, 3))
    _, grad = mse_loss(pred, target)
    return {"pred": check_input(lambda: mse_loss(pred, target)[0], pred, grad, STEP)}


def _check_bce(rng) -> Dict[str, float]:
    prob = rng.uniform(0.1, 0.9, size=(3, 6))
    logits = rng.normal(size=(3, 6))
    target = (rng.random((3, 6)) < 0.5).astype(float)
    weights = rng.choice([0.0, 0.2, 1.0], size=(3, 6))
    _, g_prob = weighted_bce_loss(prob, target, weights)
    _, g_logit = weighted_bce_with_logits(logits, target, weights)
    return {
        "prob": check_input(lambda: weighted_bce_loss(prob, target, weights)[0],
                            prob, g_prob, STEP),
        "logits": check_input(lambda: weighted_bce_with_logits(logits, target, weights)[0],
                              logits, g_logit, STEP),
    }


def _check_indicator(rng) -> Dict[str, float]:
    model = IndicatorModel(3, 4, rng)
    x = rng.normal(size=(2, 6, 3))
    targets = (rng.random((2, 6)) < 0.3).astype(float)
    weights = rng.choice([0.2, 1.0], size=(2, 6))
    weights[1, -2:] = 0.0
    return check_groups(lambda backward: model.loss(x, targets, weights, backward),
                        [model.group], STEP)


def _check_policy(rng) -> Dict[str, float]:
    cfg = PolicyConfig(mode="concat", H=2, L=2, vision_hidden=5, proprio_hidden=4,
                       head_hidden=6)
    policy = VPPolicy(cfg, obs_dim=6, proprio_dim=3, action_dim=2, rng=rng)
    obs = rng.normal(size=(4, 2, 6))
    prop = rng.normal(size=(4, 2, 3))
    target = rng.normal(size=(4, 2, 2))

    def objective(backward: bool) -> float:
        value, grad = mse_loss(policy.forward(obs, prop), target)
        if backward:
            policy.backward(grad)
        return value
    return check_groups(objective, policy.groups, STEP)


CHECKS: Dict[str, Callable[[np.random.Generator], Dict[str, float]]] = {
    "affine": _check_affine,
    "relu": lambda rng: _check_activation(ReLU(), rng),
    "tanh": lambda rng: _check_activation(Tanh(), rng),
    "sigmoid": lambda rng: _check_activation(Sigmoid(), rng),
    "concat": _check_concat,
    "mlp": _check_mlp,
    "lstm": _check_lstm,
    "mse": _check_mse,
    "bce": _check_bce,
    "indicator": _check_indicator,
    "policy": _check_policy,
}


def run_grad_checks(draws: int = 20, seed: int = 0, targets=None) -> pd.DataFrame:
    """
    Run every registered check ``draws`` times with fresh random instances.

    Returns one row per (target, draw, parameter) with the relative error and
    whether it is under the tolerance.
    """
    unknown = sorted(set(targets or ()) - set(CHECKS))
    if unknown:
        raise ArgumentError(f"unknown grad-check targets {unknown}")
    rows: List[dict] = []
    for name in (targets or CHECKS):
        check = CHECKS[name]
        for draw in range(draws):
            errors = check(make_rng(seed, "grad-check", name, draw))
            rows += [{"target": name, "draw": draw, "param": param, "rel_error": err,
                      "passed": err < TOLERANCE} for param, err in sorted(errors.items())]
    table = pd.DataFrame(rows)
    worst = table.groupby("target")["rel_error"].max()
    for name, err in worst.items():
        logger.info("grad-check %-10s max rel err %.2e", name, err)
    return table
