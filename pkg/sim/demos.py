import logging
from dataclasses import dataclass, field
from typing import Callable, List, Tuple

import numpy as np
from tqdm import tqdm

from nnkit.rng import derive_seed
from sim.env import DONE, EnvConfig, EnvState, Observation, reset, step
from sim.expert import expert_policy
from trajcore.errors import ArgumentError, InternalError
from trajcore.types import Dataset, Trajectory

logger = logging.getLogger(__name__)

ActFn = Callable[[int, EnvState, Observation], np.ndarray]


@dataclass
class Episode:
    seed: int
    dist: str
    success: bool
    steps: int
    states: List[EnvState] = field(default_factory=list)
    observations: List[Observation] = field(default_factory=list)
    actions: List[np.ndarray] = field(default_factory=list)


def rollout(act: ActFn, cfg: EnvConfig, dist: str = "id", seed: int = 0,
            record: bool = False) -> Episode:
    """
    Run one episode, calling ``act(t, state, observation)`` for every action.
    With ``record`` the terminal state is kept too, paired with a zero action.
    """
    state, obs = reset(cfg, dist, seed)
    episode = Episode(seed, dist, False, 0)
    done = False
    t = 0
    while not done:
        action = np.asarray(act(t, state, obs), dtype=np.float64)
        if record:
            episode.states.append(state)
            episode.observations.append(obs)
            episode.actions.append(action)
        state, obs, done, success = step(state, action, cfg)
        episode.success = success
        t += 1
    episode.steps = t
    if record:
        episode.states.append(state)
        episode.observations.append(obs)
        episode.actions.append(np.zeros(cfg.action_dim))
    return episode


def phase_boundaries(phases) -> List[int]:
    """Timesteps whose phase differs from the previous one, excluding the final DONE."""
    return [t for t in range(1, len(phases))
            if phases[t] != phases[t - 1] and phases[t] != DONE]


def episode_to_trajectory(episode: Episode, cfg: EnvConfig) -> Trajectory:
    states = episode.states
    phases = [s.phase for s in states]
    orientations = np.array([[0.0, 0.0, s.phi] for s in states]) if cfg.rotates else None
    meta = {
        "seed": episode.seed,
        "task": cfg.task,
        "dist": episode.dist,
        "boundaries": phase_boundaries(phases),
        "phases": phases,
    }
    return Trajectory(
        positions=np.array([s.p for s in states]),
        orientations=orientations,
        openings=np.array([s.g for s in states]),
        actions=np.array(episode.actions),
        obs=np.array([o.visual for o in episode.observations]),
        meta=meta,
    )


def expert_episode(cfg: EnvConfig, dist: str, seed: int) -> Episode:
    return rollout(lambda t, state, obs: expert_policy(state, cfg), cfg, dist, seed,
                   record=True)


def gen_demos(cfg: EnvConfig, n: int, seed: int = 0, dist: str = "id",
              progress: bool = False, stream: str = "demo") -> Dataset:
    """``n`` successful expert demonstrations; a failed rollout is an InternalError."""
    if n < 1:
        raise ArgumentError(f"need at least one demonstration, got n={n}")
    trajectories = []
    for i in tqdm(range(n), desc="demos", disable=not progress):
        episode_seed = derive_seed(seed, stream, i)
        episode = expert_episode(cfg, dist, episode_seed)
        if not episode.success:
            final = episode.states[-1]
            raise InternalError(f"expert failed after {episode.steps} steps in phase "
                                f"{final.phase!r} (p={final.p.tolist()}, "
                                f"obj={final.obj.tolist()})", episode_seed)
        trajectories.append(episode_to_trajectory(episode, cfg))
    lengths = [len(t) for t in trajectories]
    logger.info("generated %d %s demonstrations (%s task), length %d..%d", n, dist,
                cfg.task, min(lengths), max(lengths))
    return Dataset(cfg.schema, tuple(trajectories))


def expert_boundaries(cfg: EnvConfig, dist: str, seed: int) -> Tuple[List[int], int]:
    """Recorded phase boundaries and length of the expert episode for ``seed``."""
    episode = expert_episode(cfg, dist, seed)
    return phase_boundaries([s.phase for s in episode.states]), len(episode.states)
