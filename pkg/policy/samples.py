from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from indicator.series import IndicatorSeries
from trajcore.errors import ArgumentError, ConfigError
from trajcore.types import Dataset, Trajectory


def window_indices(t: int, H: int) -> np.ndarray:
    """Timesteps t-H+1..t, clamped at 0 (the first state repeats)."""
    return np.maximum(np.arange(t - H + 1, t + 1), 0)


def chunk_indices(t: int, L: int, n: int) -> np.ndarray:
    """Timesteps t..t+L-1, clamped at n-1 (the last action repeats)."""
    return np.minimum(np.arange(t, t + L), n - 1)


@dataclass(frozen=True, eq=False)
class SampleSet:
    """Every (observation window, proprio window, action chunk) of a dataset."""

    obs: np.ndarray
    proprio: np.ndarray
    actions: np.ndarray
    rho: Optional[np.ndarray]
    traj_index: np.ndarray
    timestep: np.ndarray

    def __len__(self) -> int:
        return self.obs.shape[0]


def trajectory_samples(traj: Trajectory, H: int, L: int):
    n = len(traj)
    proprio = traj.proprio
    obs = np.stack([traj.obs[window_indices(t, H)] for t in range(n)])
    prop = np.stack([proprio[window_indices(t, H)] for t in range(n)])
    actions = np.stack([traj.actions[chunk_indices(t, L, n)] for t in range(n)])
    return obs, prop, actions


def build_samples(data: Dataset, H: int, L: int,
                  rho: Optional[Sequence[IndicatorSeries]] = None) -> SampleSet:
    """One sample per timestep; the sample's rho is rho at the window's last step."""
    if len(data) == 0:
        raise ArgumentError("cannot build samples from an empty dataset")
    if rho is not None and len(rho) != len(data):
        raise ConfigError(f"got {len(rho)} rho series for {len(data)} trajectories")
    parts = [trajectory_samples(traj, H, L) for traj in data]
    rho_values = None
    if rho is not None:
        for i, (traj, series) in enumerate(zip(data, rho)):
            if len(series) != len(traj):
                raise ConfigError(f"rho series {i} has length {len(series)}, "
                                  f"trajectory has {len(traj)}")
        rho_values = np.concatenate([s.rho for s in rho])
    lengths = [len(traj) for traj in data]
    return SampleSet(
        obs=np.concatenate([p[0] for p in parts]),
        proprio=np.concatenate([p[1] for p in parts]),
        actions=np.concatenate([p[2] for p in parts]),
        rho=rho_values,
        traj_index=np.repeat(np.arange(len(data)), lengths),
        timestep=np.concatenate([np.arange(n) for n in lengths]),
    )
