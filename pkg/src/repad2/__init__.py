"""Real-time, bounded-memory anomaly detection for open-ended time series.

The package pairs a from-scratch one-step-ahead LSTM forecaster with an
adaptive three-sigma threshold over recent prediction errors. Two modes
share one state machine: an all-history threshold (repad) and a sliding
window of the W most recent error values (repad2), the latter keeping
memory bounded on never-ending streams.
"""

__version__ = "0.1.0"

from .detector import (
    Algorithm,
    Detector,
    DetectorConfig,
    LstmPredictor,
    PerfectPredictor,
    PreviousValuePredictor,
    StepReport,
    Verdict,
    retraining_ratio,
    run_stream,
)
from .errors import (
    ConfigError,
    DataFormatError,
    RepadError,
    StreamOrderError,
    ThresholdUndefinedError,
    TrainingDivergedError,
)
from .evaluation import EvalCounts, EvalSummary, MatchConfig, match_detections, score, summarize
from .lstm_core import LstmConfig, LstmModel, Normalizer, fit_normalizer, predict_next, train
from .series_io import (
    AnomalyLabel,
    LabelSet,
    SyntheticSpec,
    TimeSeries,
    TimeSeriesPoint,
    extend_labels,
    extend_series,
    generate_synthetic,
    load_labels,
    load_series,
    write_labels,
    write_series,
)
from .stats import AareValue, AllHistoryTracker, WindowedTracker, compute_aare

__all__ = [
    "__version__",
    "Algorithm",
    "Detector",
    "DetectorConfig",
    "LstmPredictor",
    "PerfectPredictor",
    "PreviousValuePredictor",
    "StepReport",
    "Verdict",
    "retraining_ratio",
    "run_stream",
    "ConfigError",
    "DataFormatError",
    "RepadError",
    "StreamOrderError",
    "ThresholdUndefinedError",
    "TrainingDivergedError",
    "EvalCounts",
    "EvalSummary",
    "MatchConfig",
    "match_detections",
    "score",
    "summarize",
    "LstmConfig",
    "LstmModel",
    "Normalizer",
    "fit_normalizer",
    "predict_next",
    "train",
    "AnomalyLabel",
    "LabelSet",
    "SyntheticSpec",
    "TimeSeries",
    "TimeSeriesPoint",
    "extend_labels",
    "extend_series",
    "generate_synthetic",
    "load_labels",
    "load_series",
    "write_labels",
    "write_series",
    "AareValue",
    "AllHistoryTracker",
    "WindowedTracker",
    "compute_aare",
]
