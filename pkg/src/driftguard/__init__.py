"""driftguard: joint point-outlier and concept-drift detection for
regression data streams, with a pluggable-robust-learner pipeline,
baseline detectors, synthetic stream generators and an evaluation/tuning
harness."""

__version__ = "0.1.0"

from .core import (
    Decision,
    DecisionKind,
    DecisionLog,
    EventKind,
    GroundTruthEvent,
    Sample,
    absolute_residual,
    residual_stats,
)
from .datagen import LabeledStream, StreamConfig, generate, inject_outliers, load_csv
from .drift_channel import DriftSignal, DriftType, EwmadState
from .evaluation import EvalReport, evaluate_log, f1, match_detections, mape, mape_star, mean_delay
from .outlier_channel import OutlierThresholds, channel1_decide, flags_for, prci_upper
from .pipeline import Pipeline, PipelineConfig, run_stream
from .regressors import (
    FitResult,
    RegressorKind,
    RegressorSpec,
    fit,
    fit_huber,
    fit_ipod,
    fit_ols,
    fit_ransac,
    fit_theilsen,
    predict,
)
from .tune import ParamSpec, TuneResult, sequd_search

__all__ = [
    "Decision",
    "DecisionKind",
    "DecisionLog",
    "DriftSignal",
    "DriftType",
    "EvalReport",
    "EventKind",
    "EwmadState",
    "FitResult",
    "GroundTruthEvent",
    "LabeledStream",
    "OutlierThresholds",
    "ParamSpec",
    "Pipeline",
    "PipelineConfig",
    "RegressorKind",
    "RegressorSpec",
    "Sample",
    "StreamConfig",
    "TuneResult",
    "absolute_residual",
    "channel1_decide",
    "evaluate_log",
    "f1",
    "fit",
    "fit_huber",
    "fit_ipod",
    "fit_ols",
    "fit_ransac",
    "fit_theilsen",
    "flags_for",
    "generate",
    "inject_outliers",
    "load_csv",
    "mape",
    "mape_star",
    "match_detections",
    "mean_delay",
    "predict",
    "prci_upper",
    "residual_stats",
    "run_stream",
    "sequd_search",
]
