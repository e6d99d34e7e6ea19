# Two-branch behavior-cloning policy with phase-guided gradient adjustment
from policy.config import (
    ADJUST_RULES, POLICY_MODES, RHO_SOURCES, TRAIN_MODES, PolicyConfig, TrainConfig,
    configure_mode,
)
from policy.network import (
    VPPolicy, head_split_check, load_policy, load_vision_group, save_policy,
)
from policy.samples import SampleSet, build_samples, chunk_indices, window_indices
from policy.train import BCResult, bc_train, linear_probe

__all__ = [
    "ADJUST_RULES", "POLICY_MODES", "RHO_SOURCES", "TRAIN_MODES",
    "PolicyConfig", "TrainConfig", "configure_mode",
    "VPPolicy", "head_split_check", "load_policy", "load_vision_group", "save_policy",
    "SampleSet", "build_samples", "chunk_indices", "window_indices",
    "BCResult", "bc_train", "linear_probe",
]
