from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from trajcore.errors import ArgumentError


def _frozen(values, shape=None) -> np.ndarray:
    """Copy into a read-only float64 array."""
    arr = np.array(values, dtype=np.float64)
    if shape is not None:
        arr = arr.reshape(shape)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class ProprioState:
    """Gripper position p, optional orientation theta and opening degree g."""

    p: np.ndarray
    theta: np.ndarray
    g: float

    def __post_init__(self):
        object.__setattr__(self, "p", _frozen(self.p).ravel())
        theta = np.zeros(0) if self.theta is None else self.theta
        object.__setattr__(self, "theta", _frozen(theta).ravel())
        if not 0.0 <= float(self.g) <= 1.0:
            raise ArgumentError(f"gripper opening must lie in [0, 1], got {self.g}")
        object.__setattr__(self, "g", float(self.g))

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.p, self.theta, [self.g]])

    def __eq__(self, other):
        if not isinstance(other, ProprioState):
            return NotImplemented
        return (np.array_equal(self.p, other.p)
                and np.array_equal(self.theta, other.theta)
                and self.g == other.g)


@dataclass(frozen=True, eq=False)
class Motion:
    """Change triple between two timesteps: position, orientation and opening deltas."""

    dp: np.ndarray
    dtheta: np.ndarray
    dg: float

    def __post_init__(self):
        object.__setattr__(self, "dp", _frozen(self.dp).ravel())
        dtheta = np.zeros(0) if self.dtheta is None else self.dtheta
        object.__setattr__(self, "dtheta", _frozen(dtheta).ravel())
        object.__setattr__(self, "dg", float(self.dg))

    @classmethod
    def zero(cls, dim_p: int, dim_theta: int = 0) -> "Motion":
        return cls(np.zeros(dim_p), np.zeros(dim_theta), 0.0)

    @property
    def has_theta(self) -> bool:
        return self.dtheta.size > 0

    def is_zero(self) -> bool:
        return not (self.dp.any() or self.dtheta.any() or self.dg != 0.0)

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.dp, self.dtheta, [self.dg]])

    def __add__(self, other: "Motion") -> "Motion":
        if self.dp.shape != other.dp.shape or self.dtheta.shape != other.dtheta.shape:
            raise ArgumentError("cannot add motions of different dimensionality")
        return Motion(self.dp + other.dp, self.dtheta + other.dtheta, self.dg + other.dg)

    def allclose(self, other: "Motion", atol: float = 1e-12) -> bool:
        return (np.allclose(self.dp, other.dp, rtol=0.0, atol=atol)
                and np.allclose(self.dtheta, other.dtheta, rtol=0.0, atol=atol)
                and abs(self.dg - other.dg) <= atol)

    def __eq__(self, other):
        if not isinstance(other, Motion):
            return NotImplemented
        return (np.array_equal(self.dp, other.dp)
                and np.array_equal(self.dtheta, other.dtheta)
                and self.dg == other.dg)


@dataclass(frozen=True)
class DatasetSchema:
    dim_p: int
    dim_theta: int
    action_dim: int
    obs_dim: int

    def __post_init__(self):
        if self.dim_p not in (2, 3):
            raise ArgumentError(f"D_p must be 2 or 3, got {self.dim_p}")
        if self.dim_theta not in (0, 3):
            raise ArgumentError(f"D_theta must be 0 or 3, got {self.dim_theta}")
        if self.action_dim < 1 or self.obs_dim < 1:
            raise ArgumentError("action and observation dimensions must be positive")

    @property
    def proprio_dim(self) -> int:
        return self.dim_p + self.dim_theta + 1


@dataclass(frozen=True, eq=False)
class Trajectory:
    """
    One demonstration: proprio states, actions and flattened visual features,
    all of length N. Arrays are stored column-wise and are read-only.
    """

    positions: np.ndarray
    orientations: np.ndarray
    openings: np.ndarray
    actions: np.ndarray
    obs: np.ndarray
    meta: Dict = field(default_factory=dict)

    def __post_init__(self):
        positions = _frozen(self.positions)
        n = positions.shape[0]
        if positions.ndim != 2:
            raise ArgumentError("positions must be a (N, D_p) array")
        orientations = self.orientations
        if orientations is None or np.size(orientations) == 0:
            orientations = np.zeros((n, 0))
        orientations = _frozen(orientations, (n, -1) if np.size(orientations) else (n, 0))
        openings = _frozen(self.openings).ravel()
        actions = _frozen(self.actions)
        obs = _frozen(self.obs)
        if n < 2:
            raise ArgumentError(f"a trajectory needs at least 2 timesteps, got {n}")
        for name, arr in (("orientations", orientations), ("openings", openings),
                          ("actions", actions), ("obs", obs)):
            if arr.shape[0] != n:
                raise ArgumentError(f"{name} has length {arr.shape[0]}, expected {n}")
        if actions.ndim != 2 or obs.ndim != 2:
            raise ArgumentError("actions and obs must be 2-D arrays")
        if np.any(openings < 0.0) or np.any(openings > 1.0):
            raise ArgumentError("gripper openings must lie in [0, 1]")
        object.__setattr__(self, "positions", positions)
        object.__setattr__(self, "orientations", orientations)
        object.__setattr__(self, "openings", openings)
        object.__setattr__(self, "actions", actions)
        object.__setattr__(self, "obs", obs)
        object.__setattr__(self, "meta", dict(self.meta))

    def __len__(self) -> int:
        return self.positions.shape[0]

    @property
    def dim_p(self) -> int:
        return self.positions.shape[1]

    @property
    def dim_theta(self) -> int:
        return self.orientations.shape[1]

    def state(self, t: int) -> ProprioState:
        return ProprioState(self.positions[t], self.orientations[t], self.openings[t])

    @property
    def states(self) -> List[ProprioState]:
        return [self.state(t) for t in range(len(self))]

    @property
    def proprio(self) -> np.ndarray:
        """(N, D_p + D_theta + 1) matrix of stacked proprio vectors."""
        return np.hstack([self.positions, self.orientations, self.openings[:, None]])

    @property
    def boundaries(self) -> Tuple[int, ...]:
        return tuple(self.meta.get("boundaries", ()))

    def conforms_to(self, schema: DatasetSchema) -> bool:
        return (self.dim_p == schema.dim_p and self.dim_theta == schema.dim_theta
                and self.actions.shape[1] == schema.action_dim
                and self.obs.shape[1] == schema.obs_dim)

    def scaled(self, c: float) -> "Trajectory":
        """
        Copy with p, theta and g multiplied by c > 0.

        The openings are scaled too, so c must keep every g·c within [0, 1];
        a factor that pushes an opening above 1 raises ArgumentError.
        """
        if c <= 0:
            raise ArgumentError(f"scale factor must be positive, got {c}")
        return Trajectory(self.positions * c, self.orientations * c, self.openings * c,
                          self.actions, self.obs, self.meta)

    def __eq__(self, other):
        if not isinstance(other, Trajectory):
            return NotImplemented
        return (np.array_equal(self.positions, other.positions)
                and np.array_equal(self.orientations, other.orientations)
                and np.array_equal(self.openings, other.openings)
                and np.array_equal(self.actions, other.actions)
                and np.array_equal(self.obs, other.obs)
                and self.meta == other.meta)


@dataclass(frozen=True)
class Dataset:
    schema: DatasetSchema
    trajectories: Tuple[Trajectory, ...] = ()

    def __post_init__(self):
        trajectories = tuple(self.trajectories)
        for i, traj in enumerate(trajectories):
            if not traj.conforms_to(self.schema):
                raise ArgumentError(f"trajectory {i} does not conform to the dataset schema")
        object.__setattr__(self, "trajectories", trajectories)

    def __len__(self) -> int:
        return len(self.trajectories)

    def __iter__(self):
        return iter(self.trajectories)

    def __getitem__(self, i) -> Trajectory:
        return self.trajectories[i]

    @classmethod
    def from_trajectories(cls, trajectories, schema: Optional[DatasetSchema] = None) -> "Dataset":
        trajectories = list(trajectories)
        if schema is None:
            if not trajectories:
                raise ArgumentError("cannot infer a schema from an empty trajectory list")
            first = trajectories[0]
            schema = DatasetSchema(first.dim_p, first.dim_theta,
                                   first.actions.shape[1], first.obs.shape[1])
        return cls(schema, tuple(trajectories))
