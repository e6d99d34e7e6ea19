from dataclasses import asdict, dataclass
from typing import Optional

from trajcore.errors import ArgumentError

DISTANCE_MODES = ("gap", "cotpc")


@dataclass(frozen=True)
class SegParams:
    """
    Segmentation settings.

    Exactly one of ``penalty`` (cost per change point) and ``k_changes``
    (fixed number of change points) is active; pass ``penalty=None`` with
    ``k_changes``.
    """

    alpha: float = 1.0
    beta: float = 2e-3
    penalty: Optional[float] = 0.005
    k_changes: Optional[int] = None
    min_phase_len: int = 3
    distance_mode: str = "gap"
    mismatch_penalty: bool = False

    def __post_init__(self):
        if self.alpha < 0 or self.beta < 0:
            raise ArgumentError("alpha and beta must be non-negative")
        if (self.penalty is None) == (self.k_changes is None):
            raise ArgumentError("exactly one of penalty and k_changes must be set")
        if self.penalty is not None and self.penalty < 0:
            raise ArgumentError(f"penalty must be non-negative, got {self.penalty}")
        if self.k_changes is not None and self.k_changes < 0:
            raise ArgumentError(f"k_changes must be non-negative, got {self.k_changes}")
        if self.min_phase_len < 2:
            raise ArgumentError(f"min_phase_len must be at least 2, got {self.min_phase_len}")
        if self.distance_mode not in DISTANCE_MODES:
            raise ArgumentError(f"distance_mode must be one of {DISTANCE_MODES}")

    @classmethod
    def fixed(cls, k_changes: int, **kwargs) -> "SegParams":
        return cls(penalty=None, k_changes=k_changes, **kwargs)

    @property
    def penalized(self) -> bool:
        return self.penalty is not None

    def echo(self) -> dict:
        return asdict(self)
