from dataclasses import dataclass
from typing import Iterable

import numpy as np

from indicator.labels import _check_indices
from trajcore.errors import ArgumentError

SERIES_SOURCES = ("learned", "smooth", "fixed")


@dataclass(frozen=True, eq=False)
class IndicatorSeries:
    """Per-timestep transition probability rho and where it came from."""

    rho: np.ndarray
    source: str

    def __post_init__(self):
        rho = np.array(self.rho, dtype=np.float64).ravel()
        if self.source not in SERIES_SOURCES:
            raise ArgumentError(f"unknown rho source {self.source!r}")
        if np.any(~np.isfinite(rho)) or np.any(rho < 0.0) or np.any(rho > 1.0):
            raise ArgumentError("rho values must lie in [0, 1]")
        rho.setflags(write=False)
        object.__setattr__(self, "rho", rho)

    def __len__(self) -> int:
        return self.rho.shape[0]

    def to_record(self, traj_id: int) -> dict:
        return {"traj_id": traj_id, "source": self.source, "rho": [float(r) for r in self.rho]}


def smooth_rho(indices: Iterable[int], n: int, sigma: float) -> IndicatorSeries:
    """rho_t = max over change indices i of exp(-(t - i)^2 / (2 sigma^2))."""
    if sigma <= 0:
        raise ArgumentError(f"sigma must be positive, got {sigma}")
    indices = np.asarray(_check_indices(indices, n), dtype=np.float64)
    if indices.size == 0:
        return IndicatorSeries(np.zeros(n), "smooth")
    t = np.arange(n, dtype=np.float64)
    bumps = np.exp(-((t[:, None] - indices[None, :]) ** 2) / (2.0 * sigma ** 2))
    return IndicatorSeries(bumps.max(axis=1), "smooth")


def fixed_rho(value: float, n: int) -> IndicatorSeries:
    if not 0.0 <= value <= 1.0:
        raise ArgumentError(f"fixed rho must lie in [0, 1], got {value}")
    return IndicatorSeries(np.full(n, float(value)), "fixed")


def fixed_rho_at(indices: Iterable[int], n: int, value: float) -> IndicatorSeries:
    """Fixed magnitude only at the change indices, zero elsewhere."""
    if not 0.0 <= value <= 1.0:
        raise ArgumentError(f"fixed rho must lie in [0, 1], got {value}")
    rho = np.zeros(n)
    rho[_check_indices(indices, n)] = value
    return IndicatorSeries(rho, "fixed")
