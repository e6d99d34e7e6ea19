"""
Action-substitution experiment: roll out a base agent but execute an
alternative agent's actions (under the same observations) for a window of
timesteps, and measure how success changes with the window's position.
"""
import logging
from typing import NamedTuple, Sequence

import pandas as pd
from tqdm import tqdm

from sim.demos import expert_boundaries, rollout
from sim.env import EnvConfig
from sim.evaluate import as_agent
from trajcore.errors import ArgumentError

logger = logging.getLogger(__name__)

TRANSITION = "transition"
CONSISTENT = "consistent"
BEYOND = "beyond"


class InterventionResult(NamedTuple):
    baseline_rate: float
    windows: pd.DataFrame
    pairs: pd.DataFrame

    def drop(self, region: str) -> float:
        """Mean paired success drop over (episode, window) pairs in ``region``."""
        rows = self.pairs[self.pairs["region"] == region]
        if rows.empty:
            return float("nan")
        return float((rows["baseline_success"].astype(float) - rows["success"].astype(float)).mean())


def classify_window(t0: int, width: int, boundaries: Sequence[int], length: int,
                    margin: int = 3) -> str:
    """Whether [t0, t0 + width) overlaps a +-margin band around an expert phase boundary."""
    if t0 >= length:
        return BEYOND
    last = t0 + width - 1
    if any(b - margin <= last and b + margin >= t0 for b in boundaries):
        return TRANSITION
    return CONSISTENT


def _run(base, alt, cfg: EnvConfig, dist: str, seed: int, t0: int, width: int) -> bool:
    base.reset()
    alt.reset()

    def act(t, state, obs):
        a_base = base.act(state, obs)
        a_alt = alt.act(state, obs)
        return a_alt if t0 <= t < t0 + width else a_base

    return rollout(act, cfg, dist, seed).success


def intervention_experiment(base, alt, cfg: EnvConfig, window_width: int = 10,
                            seeds: Sequence[int] = (0,), stride: int = 5, dist: str = "id",
                            margin: int = 3, progress: bool = False) -> InterventionResult:
    """
    For every window start t0 = 0, stride, ... below max_steps, rerun each
    episode seed with ``alt``'s actions executed during [t0, t0 + window_width).
    Windows are classified against the expert's recorded phase boundaries
    for the same seed.
    """
    if window_width < 1 or stride < 1:
        raise ArgumentError("window_width and stride must be positive")
    if not seeds:
        raise ArgumentError("intervention needs at least one episode seed")
    base = as_agent(base, cfg)
    alt = as_agent(alt, cfg)
    baseline = {}
    for s in seeds:
        base.reset()
        baseline[s] = rollout(lambda t, state, obs: base.act(state, obs), cfg, dist, s).success
    expert = {s: expert_boundaries(cfg, dist, s) for s in seeds}

    rows = []
    starts = range(0, cfg.max_steps, stride)
    for t0 in tqdm(starts, desc="intervene", disable=not progress):
        for s in seeds:
            boundaries, length = expert[s]
            rows.append((s, t0, _run(base, alt, cfg, dist, s, t0, window_width), baseline[s],
                         classify_window(t0, window_width, boundaries, length, margin)))
    pairs = pd.DataFrame(rows, columns=["seed", "t0", "success", "baseline_success", "region"])
    windows = (pairs.assign(success=pairs["success"].astype(float),
                            transition=(pairs["region"] == TRANSITION).astype(float))
               .groupby("t0", sort=True)
               .agg(success_rate=("success", "mean"), transition_share=("transition", "mean"),
                    n=("success", "size"))
               .reset_index())
    rate = sum(baseline.values()) / len(seeds)
    result = InterventionResult(rate, windows, pairs)
    logger.info("intervention: baseline %.3f, transition drop %.3f, consistent drop %.3f",
                rate, result.drop(TRANSITION), result.drop(CONSISTENT))
    return result
