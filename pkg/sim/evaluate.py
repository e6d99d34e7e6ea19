import logging
from typing import List, NamedTuple

import numpy as np
import pandas as pd
from tqdm import tqdm

from nnkit.rng import derive_seed, make_rng
from policy.network import VPPolicy
from sim.demos import rollout
from sim.env import EnvConfig, EnvState, Observation
from trajcore.errors import ArgumentError, ConfigError

logger = logging.getLogger(__name__)

EPISODE_COLUMNS = ["seed", "dist", "success", "steps"]


class PolicyAgent:
    """Feeds a policy its last H observations and executes the first action of each chunk."""

    name = "policy"

    def __init__(self, policy: VPPolicy, cfg: EnvConfig):
        expected = (cfg.obs_dim, cfg.proprio_dim, cfg.action_dim)
        actual = (policy.obs_dim, policy.proprio_dim, policy.action_dim)
        if expected != actual:
            raise ConfigError(f"policy dimensions (obs, proprio, action) = {actual} do not "
                              f"match the environment's {expected}")
        self.policy = policy
        self.H = policy.cfg.H
        self.reset()

    def reset(self) -> None:
        self._visual: List[np.ndarray] = []
        self._proprio: List[np.ndarray] = []

    def _window(self, history: List[np.ndarray]) -> np.ndarray:
        recent = history[-self.H:]
        pad = [recent[0]] * (self.H - len(recent))
        return np.stack(pad + recent)

    def act(self, state: EnvState, observation: Observation) -> np.ndarray:
        self._visual.append(observation.visual)
        self._proprio.append(observation.proprio.as_vector())
        proprio = self._window(self._proprio) if self.policy.cfg.uses_proprio else None
        return self.policy.act(self._window(self._visual), proprio)[0]


class RandomAgent:
    """Uniform actions in [-1, 1] per component."""

    name = "random"

    def __init__(self, cfg: EnvConfig, seed: int = 0):
        self.action_dim = cfg.action_dim
        self.rng = make_rng(seed, "random-agent")

    def reset(self) -> None:
        pass

    def act(self, state: EnvState, observation: Observation) -> np.ndarray:
        return self.rng.uniform(-1.0, 1.0, size=self.action_dim)


class EvalResult(NamedTuple):
    success_rate: float
    episodes: pd.DataFrame


def episode_seeds(seed: int, n: int, dist: str) -> List[int]:
    return [derive_seed(seed, "eval", dist, i) for i in range(n)]


def as_agent(agent, cfg: EnvConfig):
    return PolicyAgent(agent, cfg) if isinstance(agent, VPPolicy) else agent


def evaluate(agent, cfg: EnvConfig, n_rollouts: int = 100, dist: str = "id", seed: int = 0,
             progress: bool = False) -> EvalResult:
    """Closed-loop success rate of ``agent`` (a VPPolicy or any object with reset/act)."""
    if n_rollouts < 1:
        raise ArgumentError(f"need at least one rollout, got {n_rollouts}")
    agent = as_agent(agent, cfg)
    rows = []
    for episode_seed in tqdm(episode_seeds(seed, n_rollouts, dist), desc=f"eval {dist}",
                             disable=not progress):
        agent.reset()
        episode = rollout(lambda t, state, obs: agent.act(state, obs), cfg, dist, episode_seed)
        rows.append((episode_seed, dist, episode.success, episode.steps))
    episodes = pd.DataFrame(rows, columns=EPISODE_COLUMNS)
    rate = float(episodes["success"].mean())
    logger.info("%s agent: %s success %.3f over %d rollouts", getattr(agent, "name", "agent"),
                dist, rate, n_rollouts)
    return EvalResult(rate, episodes)
