# Motion-transition indicator: labels, LSTM estimator and baselines
from indicator.labels import IndicatorLabels, build_labels, distance_to_indices
from indicator.series import (
    SERIES_SOURCES, IndicatorSeries, fixed_rho, fixed_rho_at, smooth_rho,
)
from indicator.model import (
    IndicatorHyper, IndicatorModel, load_indicator, predict_rho, save_indicator,
    train_indicator,
)
from indicator.evaluation import transition_auc, transition_targets

__all__ = [
    "IndicatorLabels", "build_labels", "distance_to_indices",
    "SERIES_SOURCES", "IndicatorSeries", "fixed_rho", "fixed_rho_at", "smooth_rho",
    "IndicatorHyper", "IndicatorModel", "load_indicator", "predict_rho",
    "save_indicator", "train_indicator",
    "transition_auc", "transition_targets",
]
