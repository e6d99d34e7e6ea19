"""
Toy 2-D pick-and-place environment.

The gripper starts at a fixed corner, an object spawns uniformly in a
rectangular region, and the task is to carry it to a fixed target. The
``rotate`` variant adds a yaw angle phi (embedded as theta = (0, 0, phi))
that must reach ``rot_target`` before the object is released.

Vision is an R x R occupancy grid with three channels (object, target,
gripper), flattened channel-major. Proprioception is (p, [theta], g) and
never contains the object position.
"""
import logging
import math
from dataclasses import dataclass, field, replace
from typing import Tuple

import numpy as np

from nnkit.rng import make_rng
from trajcore.errors import ArgumentError, ConfigError
from trajcore.types import DatasetSchema, ProprioState

logger = logging.getLogger(__name__)

TASKS = ("translate", "rotate")
DISTS = ("id", "ood")
RENDER_MODES = ("bilinear", "nearest")

APPROACH = "approach"
GRASP = "grasp"
TRANSPORT = "transport"
ROTATE = "rotate"
PLACE = "place"
DONE = "done"
PHASES = (APPROACH, GRASP, TRANSPORT, ROTATE, PLACE, DONE)

# g below this closes the gripper, at or above it opens it
GRIP_THRESHOLD = 0.5
# opening the expert holds objects at
G_HOLD = 0.2
SNAP_TOL = 1e-9


@dataclass(frozen=True)
class Region:
    x0: float
    x1: float
    y0: float
    y1: float

    def __post_init__(self):
        if not (0.0 <= self.x0 < self.x1 <= 1.0 and 0.0 <= self.y0 < self.y1 <= 1.0):
            raise ConfigError(f"region {self} must be a non-empty box inside the unit square")

    def contains(self, point) -> bool:
        x, y = point
        return self.x0 <= x <= self.x1 and self.y0 <= y <= self.y1

    def overlaps(self, other: "Region") -> bool:
        return (self.x0 < other.x1 and other.x0 < self.x1
                and self.y0 < other.y1 and other.y0 < self.y1)

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        return np.array([rng.uniform(self.x0, self.x1), rng.uniform(self.y0, self.y1)])


@dataclass(frozen=True)
class EnvConfig:
    task: str = "translate"
    start: Tuple[float, float] = (0.1, 0.1)
    object_spawn: Region = field(default_factory=lambda: Region(0.45, 0.75, 0.55, 0.85))
    ood_spawn: Region = field(default_factory=lambda: Region(0.15, 0.40, 0.55, 0.85))
    target: Tuple[float, float] = (0.85, 0.15)
    grasp_radius: float = 0.05
    place_radius: float = 0.05
    grid: int = 16
    max_steps: int = 80
    action_scale: float = 0.05
    rot_scale: float = math.pi / 16
    rot_target: float = math.pi / 2
    rot_tolerance: float = math.pi / 32
    render: str = "bilinear"

    def __post_init__(self):
        if self.task not in TASKS:
            raise ConfigError(f"task must be one of {TASKS}, got {self.task!r}")
        if self.render not in RENDER_MODES:
            raise ConfigError(f"render must be one of {RENDER_MODES}, got {self.render!r}")
        if self.object_spawn.overlaps(self.ood_spawn):
            raise ConfigError("object_spawn and ood_spawn must be disjoint")
        if self.grasp_radius <= 0 or self.place_radius <= 0:
            raise ConfigError("grasp_radius and place_radius must be positive")
        if self.grid < 2 or self.max_steps < 1 or self.action_scale <= 0:
            raise ConfigError("grid, max_steps and action_scale must be positive")

    @property
    def rotates(self) -> bool:
        return self.task == "rotate"

    @property
    def dim_theta(self) -> int:
        return 3 if self.rotates else 0

    @property
    def proprio_dim(self) -> int:
        return 2 + self.dim_theta + 1

    @property
    def action_dim(self) -> int:
        return 4 if self.rotates else 3

    @property
    def obs_dim(self) -> int:
        return 3 * self.grid * self.grid

    @property
    def schema(self) -> DatasetSchema:
        return DatasetSchema(2, self.dim_theta, self.action_dim, self.obs_dim)

    def spawn(self, dist: str) -> Region:
        if dist not in DISTS:
            raise ArgumentError(f"dist must be one of {DISTS}, got {dist!r}")
        return self.object_spawn if dist == "id" else self.ood_spawn


@dataclass(frozen=True, eq=False)
class EnvState:
    """Immutable snapshot; ``rest`` counts consecutive steps without proprio change."""

    p: np.ndarray
    phi: float
    g: float
    obj: np.ndarray
    held: bool
    steps: int = 0
    rest: int = 0
    success: bool = False
    phase: str = APPROACH

    def proprio(self, cfg: EnvConfig) -> ProprioState:
        theta = (0.0, 0.0, self.phi) if cfg.rotates else None
        return ProprioState(self.p, theta, self.g)

    def proprio_vector(self, cfg: EnvConfig) -> np.ndarray:
        if cfg.rotates:
            return np.array([self.p[0], self.p[1], 0.0, 0.0, self.phi, self.g])
        return np.array([self.p[0], self.p[1], self.g])

    def __eq__(self, other):
        if not isinstance(other, EnvState):
            return NotImplemented
        return (np.array_equal(self.p, other.p) and self.phi == other.phi
                and self.g == other.g and np.array_equal(self.obj, other.obj)
                and self.held == other.held and self.steps == other.steps
                and self.rest == other.rest and self.success == other.success
                and self.phase == other.phase)


@dataclass(frozen=True, eq=False)
class Observation:
    visual: np.ndarray
    proprio: ProprioState


def cell_index(x: float, grid: int) -> int:
    return min(int(x * grid), grid - 1)


def _axis_weights(x: float, grid: int):
    c = cell_index(x, grid)
    offset = x * grid - (c + 0.5)
    n = c + (1 if offset > 0 else -1)
    if offset == 0.0 or not 0 <= n < grid:
        return [(c, 1.0)]
    return [(c, 1.0 - abs(offset)), (n, abs(offset))]


def render(state: EnvState, cfg: EnvConfig) -> np.ndarray:
    """
    Flattened (3, R, R) grid, rows indexed by y and columns by x. In
    bilinear mode each point spreads over up to four cells; the cell that
    contains the point always carries the largest share.
    """
    R = cfg.grid
    grid = np.zeros((3, R, R))
    for channel, (x, y) in enumerate((state.obj, cfg.target, state.p)):
        if cfg.render == "nearest":
            grid[channel, cell_index(y, R), cell_index(x, R)] = 1.0
            continue
        for row, wy in _axis_weights(y, R):
            for col, wx in _axis_weights(x, R):
                grid[channel, row, col] += wy * wx
    return grid.reshape(-1)


def observe(state: EnvState, cfg: EnvConfig) -> Observation:
    return Observation(render(state, cfg), state.proprio(cfg))


def expert_phase(state: EnvState, cfg: EnvConfig) -> str:
    """Phase the scripted expert is in at ``state``."""
    if state.success:
        return DONE
    if not state.held:
        if np.linalg.norm(state.p - state.obj) > SNAP_TOL:
            return APPROACH
        return GRASP
    # at the target the grip only loosens, so this must not fall back to GRASP
    if np.linalg.norm(state.p - np.asarray(cfg.target)) <= SNAP_TOL:
        if cfg.rotates and abs(state.phi - cfg.rot_target) > SNAP_TOL:
            return ROTATE
        return PLACE
    if state.g > G_HOLD + SNAP_TOL:
        return GRASP
    return TRANSPORT


def reset(cfg: EnvConfig, dist: str = "id", seed: int = 0) -> Tuple[EnvState, Observation]:
    rng = make_rng(seed, "reset")
    obj = cfg.spawn(dist).sample(rng)
    state = EnvState(p=np.array(cfg.start, dtype=np.float64), phi=0.0, g=1.0, obj=obj,
                     held=False)
    state = replace(state, phase=expert_phase(state, cfg))
    return state, observe(state, cfg)


def step(state: EnvState, action, cfg: EnvConfig) -> Tuple[EnvState, Observation, bool, bool]:
    """Advance one step; returns (state', observation, done, success)."""
    action = np.asarray(action, dtype=np.float64).ravel()
    if action.shape != (cfg.action_dim,):
        raise ArgumentError(f"action must have {cfg.action_dim} components, got {action.shape}")
    if not np.all(np.isfinite(action)):
        raise ArgumentError("action contains non-finite values")
    if state.success or state.steps >= cfg.max_steps:
        raise ArgumentError("episode is already over")

    p = np.clip(state.p + cfg.action_scale * action[:2], 0.0, 1.0)
    phi = state.phi
    if cfg.rotates:
        phi = float(np.clip(phi + cfg.rot_scale * action[2], -math.pi, math.pi))
    g = float(np.clip(state.g + action[-1], 0.0, 1.0))

    held = state.held
    obj = state.obj
    success = False
    if held:
        obj = p
        if state.g < GRIP_THRESHOLD <= g:
            held = False
            success = bool(np.linalg.norm(obj - np.asarray(cfg.target)) <= cfg.place_radius
                           and (not cfg.rotates
                                or abs(phi - cfg.rot_target) <= cfg.rot_tolerance))
    elif g < GRIP_THRESHOLD <= state.g and np.linalg.norm(p - obj) <= cfg.grasp_radius:
        held = True
        obj = p

    moved = not (np.array_equal(p, state.p) and phi == state.phi and g == state.g)
    new = EnvState(p=p, phi=phi, g=g, obj=np.array(obj), held=held,
                   steps=state.steps + 1, rest=0 if moved else state.rest + 1,
                   success=success)
    new = replace(new, phase=expert_phase(new, cfg))
    done = success or new.steps >= cfg.max_steps
    return new, observe(new, cfg), done, success
