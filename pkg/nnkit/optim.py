"""
SGD and Adam over ParamGroups.

Both take a ``scale`` that multiplies the raw gradient before anything else
happens. For SGD that is the same as scaling the step; for Adam the scaled
gradient also feeds the moment estimates, so the update is not linear in
``scale``.
"""
from dataclasses import dataclass, field
from typing import Dict

import numpy as np

from nnkit.params import ParamGroup
from trajcore.errors import ArgumentError

OPTIMIZERS = ("sgd", "adam")


@dataclass
class OptimizerState:
    kind: str = "adam"
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    steps: Dict[str, int] = field(default_factory=dict)
    m: Dict[str, np.ndarray] = field(default_factory=dict)
    v: Dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in OPTIMIZERS:
            raise ArgumentError(f"unknown optimizer {self.kind!r}")
        if self.lr <= 0:
            raise ArgumentError(f"learning rate must be positive, got {self.lr}")


def sgd_step(group: ParamGroup, opt: OptimizerState, scale: float = 1.0) -> None:
    """w <- w - scale * lr * grad."""
    for key, param in group.params.items():
        param -= scale * opt.lr * group.grads[key]
    opt.steps[group.name] = opt.steps.get(group.name, 0) + 1


def adam_step(group: ParamGroup, opt: OptimizerState, scale: float = 1.0) -> None:
    """Adam with bias correction on the pre-scaled gradient g' = scale * g."""
    t = opt.steps.get(group.name, 0) + 1
    opt.steps[group.name] = t
    b1, b2 = opt.beta1, opt.beta2
    for key, param in group.params.items():
        slot = f"{group.name}/{key}"
        if slot not in opt.m:
            opt.m[slot] = np.zeros_like(param)
            opt.v[slot] = np.zeros_like(param)
        g = scale * group.grads[key]
        m = opt.m[slot]
        v = opt.v[slot]
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        m_hat = m / (1.0 - b1 ** t)
        v_hat = v / (1.0 - b2 ** t)
        param -= opt.lr * m_hat / (np.sqrt(v_hat) + opt.eps)


def optimizer_step(group: ParamGroup, opt: OptimizerState, scale: float = 1.0) -> None:
    if opt.kind == "sgd":
        sgd_step(group, opt, scale)
    else:
        adam_step(group, opt, scale)
