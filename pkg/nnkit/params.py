import copy
from dataclasses import dataclass, field
from typing import Dict, Iterable, Optional

import numpy as np

from trajcore.errors import ArgumentError

TAGS = ("vision", "proprio", "head", "indicator")


@dataclass
class ParamGroup:
    """
    Named tensors that are optimized (or frozen) together.

    Layers keep the group and look their arrays up by key, and optimizers
    update the arrays in place, so references held by layers stay valid.
    """

    name: str
    tag: str
    params: Dict[str, np.ndarray] = field(default_factory=dict)
    grads: Dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        if self.tag not in TAGS:
            raise ArgumentError(f"unknown group tag {self.tag!r}; expected one of {TAGS}")
        for key, value in self.params.items():
            self.params[key] = np.ascontiguousarray(value, dtype=np.float64)
            if key not in self.grads:
                self.grads[key] = np.zeros_like(self.params[key])

    def add(self, key: str, value: np.ndarray) -> np.ndarray:
        if key in self.params:
            raise ArgumentError(f"group {self.name!r} already has a parameter {key!r}")
        value = np.ascontiguousarray(value, dtype=np.float64)
        self.params[key] = value
        self.grads[key] = np.zeros_like(value)
        return value

    def zero_grad(self) -> None:
        for g in self.grads.values():
            g.fill(0.0)

    def scale_grads(self, factor: float, keys: Optional[Iterable[str]] = None) -> None:
        for key in (self.params if keys is None else keys):
            self.grads[key] *= factor

    def num_params(self) -> int:
        return int(sum(p.size for p in self.params.values()))

    def snapshot(self) -> Dict[str, np.ndarray]:
        return {k: v.copy() for k, v in self.params.items()}

    def copy(self, name: Optional[str] = None) -> "ParamGroup":
        clone = ParamGroup(name or self.name, self.tag,
                           copy.deepcopy(self.params), copy.deepcopy(self.grads))
        return clone

    def load_state(self, params: Dict[str, np.ndarray]) -> None:
        """Overwrite parameter values in place (shapes must match)."""
        for key, value in params.items():
            if key not in self.params:
                raise ArgumentError(f"group {self.name!r} has no parameter {key!r}")
            if self.params[key].shape != np.shape(value):
                raise ArgumentError(f"shape mismatch for {self.name}/{key}: "
                                    f"{self.params[key].shape} vs {np.shape(value)}")
            self.params[key][...] = value
