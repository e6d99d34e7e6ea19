from typing import List

import numpy as np

from trajcore.errors import ArgumentError
from trajcore.types import Motion, Trajectory


def motion_between(traj: Trajectory, i: int, j: int) -> Motion:
    """
    Motion m_{i:j} of the gripper between timesteps i and j.

    Computed as a difference of endpoints, so m_{i:k} = m_{i:j} + m_{j:k}
    holds up to one rounding per component.
    """
    n = len(traj)
    if not (0 <= i <= j < n):
        raise ArgumentError(f"need 0 <= i <= j < {n}, got i={i}, j={j}")
    return Motion(
        traj.positions[j] - traj.positions[i],
        traj.orientations[j] - traj.orientations[i],
        traj.openings[j] - traj.openings[i],
    )


def delta_sequence(traj: Trajectory) -> List[Motion]:
    """Adjacent motions [m_{0:1}, ..., m_{N-2:N-1}]."""
    if len(traj) < 2:
        raise ArgumentError("delta sequence needs at least 2 timesteps")
    return [motion_between(traj, i, i + 1) for i in range(len(traj) - 1)]


def delta_matrix(traj: Trajectory) -> np.ndarray:
    """Same as delta_sequence but stacked as a (N-1, D_p + D_theta + 1) array."""
    if len(traj) < 2:
        raise ArgumentError("delta sequence needs at least 2 timesteps")
    return np.diff(traj.proprio, axis=0)
