# Motion-consistency distance and change-point detection
from segment.params import DISTANCE_MODES, SegParams
from segment.distance import cosine, cotpc_distance, motion_distance, phase_cost
from segment.cpd import (
    PhaseCostTable, SegmentationResult, objective_value, segment_bruteforce, segment_dp,
)
from segment.noise import inject_index_noise
from segment.metrics import boundary_precision_recall
from segment.io import load_segmentations, save_segmentations

__all__ = [
    "DISTANCE_MODES", "SegParams",
    "cosine", "cotpc_distance", "motion_distance", "phase_cost",
    "PhaseCostTable", "SegmentationResult", "objective_value",
    "segment_bruteforce", "segment_dp",
    "inject_index_noise", "boundary_precision_recall",
    "load_segmentations", "save_segmentations",
]
