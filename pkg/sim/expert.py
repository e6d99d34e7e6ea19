"""
Scripted multi-phase expert.

approach (straight line to the object, gripper open) -> grasp (close in
place down to G_HOLD) -> transport (straight line to the target) ->
[rotate: one settle step, then turn while tightening the grip] -> place
(open until release).
"""
import numpy as np

from sim.env import (
    APPROACH, GRASP, G_HOLD, PLACE, ROTATE, SNAP_TOL, TRANSPORT, EnvConfig, EnvState,
)

GRASP_RATE = 0.2
PLACE_RATE = 0.1
TIGHTEN_RATE = 0.025


def _toward(p: np.ndarray, goal, scale: float) -> np.ndarray:
    """Unit step toward goal, shortened so the last step lands exactly."""
    d = np.asarray(goal, dtype=np.float64) - p
    dist = np.linalg.norm(d)
    if dist <= scale:
        return d / scale
    return d / dist


def expert_policy(state: EnvState, cfg: EnvConfig) -> np.ndarray:
    """Action (dp_x, dp_y, [dphi], dg) of the scripted expert at ``state``."""
    dp = np.zeros(2)
    dphi = 0.0
    dg = 0.0
    phase = state.phase
    if phase == APPROACH:
        dp = _toward(state.p, state.obj, cfg.action_scale)
    elif phase == GRASP:
        dg = -min(GRASP_RATE, state.g - G_HOLD)
    elif phase == TRANSPORT:
        dp = _toward(state.p, cfg.target, cfg.action_scale)
    elif phase == ROTATE:
        settled = state.rest > 0 or abs(state.phi) > SNAP_TOL
        if settled:
            dphi = float(np.clip((cfg.rot_target - state.phi) / cfg.rot_scale, -1.0, 1.0))
            dg = -min(TIGHTEN_RATE, state.g)
    elif phase == PLACE:
        dg = PLACE_RATE
    if cfg.rotates:
        return np.array([dp[0], dp[1], dphi, dg])
    return np.array([dp[0], dp[1], dg])


class ExpertAgent:
    """The scripted expert behind the agent interface used for evaluation."""

    name = "expert"

    def __init__(self, cfg: EnvConfig):
        self.cfg = cfg

    def reset(self) -> None:
        pass

    def act(self, state: EnvState, observation) -> np.ndarray:
        return expert_policy(state, self.cfg)
