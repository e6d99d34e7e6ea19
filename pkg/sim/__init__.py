# Toy pick-and-place simulator, scripted expert, evaluation and interventions
from sim.env import (
    APPROACH, DISTS, DONE, GRASP, PHASES, PLACE, ROTATE, TASKS, TRANSPORT,
    EnvConfig, EnvState, Observation, Region, cell_index, expert_phase, observe,
    render, reset, step,
)
from sim.expert import ExpertAgent, expert_policy
from sim.demos import (
    Episode, episode_to_trajectory, expert_boundaries, gen_demos, phase_boundaries, rollout,
)
from sim.evaluate import EvalResult, PolicyAgent, RandomAgent, episode_seeds, evaluate
from sim.intervene import InterventionResult, classify_window, intervention_experiment

__all__ = [
    "APPROACH", "DISTS", "DONE", "GRASP", "PHASES", "PLACE", "ROTATE", "TASKS", "TRANSPORT",
    "EnvConfig", "EnvState", "Observation", "Region", "cell_index", "expert_phase",
    "observe", "render", "reset", "step",
    "ExpertAgent", "expert_policy",
    "Episode", "episode_to_trajectory", "expert_boundaries", "gen_demos",
    "phase_boundaries", "rollout",
    "EvalResult", "PolicyAgent", "RandomAgent", "episode_seeds", "evaluate",
    "InterventionResult", "classify_window", "intervention_experiment",
]
