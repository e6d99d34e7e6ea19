# Trajectory data model shared by every other module
from trajcore.errors import (
    ArgumentError, ConfigError, FormatError, GapError, InternalError,
    RefusalError, TrainingError,
)
from trajcore.types import Dataset, DatasetSchema, Motion, ProprioState, Trajectory
from trajcore.motion import delta_matrix, delta_sequence, motion_between
from trajcore.dataset import load_dataset, save_dataset

__all__ = [
    "ArgumentError", "ConfigError", "FormatError", "GapError", "InternalError",
    "RefusalError", "TrainingError",
    "Dataset", "DatasetSchema", "Motion", "ProprioState", "Trajectory",
    "delta_matrix", "delta_sequence", "motion_between",
    "load_dataset", "save_dataset",
]
