"""Online anomaly-detection state machines (RePAD and RePAD2 modes).

One point goes in, one report comes out. Life of a stream, with lookback
b (3 unless configured otherwise for the all-history mode):

* T < b-1            collect only
* b-1 <= T < 2b-1    train on the last b points, predict the next point
* 2b-1 <= T < 2b+1   first error values: compute AARE, keep training
* T >= 2b+1          detection: every point gets a Normal/Anomaly verdict
                     against the adaptive threshold; a miss triggers one
                     conditional retrain before a point is flagged

The predictor is a seam: the real LSTM backend lives in ``lstm_core``,
and deterministic stubs make the state machine testable in isolation.
"""

from __future__ import annotations

import math
import time
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Protocol, Sequence

from . import lstm_core
from .errors import ConfigError, DataFormatError, StreamOrderError
from .series_io import TimeSeries, TimeSeriesPoint
from .stats import AllHistoryTracker, WindowedTracker, compute_aare


class Algorithm(str, Enum):
    REPAD = "repad"
    REPAD2 = "repad2"


class Verdict(str, Enum):
    WARMUP = "warmup"
    NORMAL = "normal"
    ANOMALY = "anomaly"


class Predictor(Protocol):
    """Train on one window of b consecutive values; predict single points.

    ``predict`` receives the b values immediately before ``target`` and
    the target index itself (the LSTM backend ignores the index; stubs
    may use it).
    """

    def train(self, window: Sequence[float]) -> Any: ...

    def predict(self, model: Any, recent: Sequence[float], target: int) -> float: ...


class LstmPredictor:
    """Default backend: a fresh deterministic LSTM per training call."""

    def __init__(self, config: lstm_core.LstmConfig | None = None):
        self.config = config or lstm_core.LstmConfig()

    def train(self, window: Sequence[float]) -> lstm_core.LstmModel:
        return lstm_core.train(window, self.config)

    def predict(self, model: lstm_core.LstmModel, recent: Sequence[float], target: int) -> float:
        return lstm_core.predict_next(model, recent)


class _StubModel:
    """Marker object so tests can follow which trained model is in use."""

    __slots__ = ("ordinal", "window")

    def __init__(self, ordinal: int, window: tuple[float, ...]):
        self.ordinal = ordinal
        self.window = window


class PreviousValuePredictor:
    """Stub: the forecast is always the most recent observed value."""

    def __init__(self) -> None:
        self._trained = 0

    def train(self, window: Sequence[float]) -> _StubModel:
        self._trained += 1
        return _StubModel(self._trained, tuple(window))

    def predict(self, model: _StubModel, recent: Sequence[float], target: int) -> float:
        return float(recent[-1])


class PerfectPredictor:
    """Stub: forecasts the actual upcoming value from a known series."""

    def __init__(self, values: Sequence[float]):
        self._values = [float(v) for v in values]
        self._trained = 0

    def train(self, window: Sequence[float]) -> _StubModel:
        self._trained += 1
        return _StubModel(self._trained, tuple(window))

    def predict(self, model: _StubModel, recent: Sequence[float], target: int) -> float:
        return self._values[target]


def build_predictor(
    spec: str, lstm_config: lstm_core.LstmConfig, series_values: Sequence[float] | None = None
) -> Predictor:
    """Resolve a predictor spec string: ``lstm``, ``stub:previous``, ``stub:perfect``."""
    if spec == "lstm":
        return LstmPredictor(lstm_config)
    if spec == "stub:previous":
        return PreviousValuePredictor()
    if spec == "stub:perfect":
        if series_values is None:
            raise ConfigError("stub:perfect needs the full series up front")
        return PerfectPredictor(series_values)
    raise ConfigError(f"unknown predictor {spec!r}")


@dataclass(frozen=True)
class DetectorConfig:
    algorithm: Algorithm = Algorithm.REPAD2
    window: int | None = None  # W, required for repad2
    lookback: int = 3
    lstm: lstm_core.LstmConfig = field(default_factory=lstm_core.LstmConfig)
    predictor: Predictor | None = None  # defaults to LstmPredictor(lstm)
    store_history: bool = False  # repad only: keep every AARE (debug)

    def __post_init__(self) -> None:
        algorithm = Algorithm(self.algorithm)
        object.__setattr__(self, "algorithm", algorithm)
        if algorithm is Algorithm.REPAD2:
            if self.lookback != 3:
                raise ConfigError("repad2 always uses a lookback of 3")
            if self.window is None:
                raise ConfigError("repad2 requires a window size W")
            if self.window < 3:
                raise ConfigError(f"repad2 window must be >= 3, got {self.window}")
            if self.store_history:
                raise ConfigError("store_history applies to the repad (all-history) mode only")
        else:
            if self.window is not None:
                raise ConfigError("window W applies to repad2 only")
            if self.lookback < 2:
                raise ConfigError(f"lookback must be >= 2, got {self.lookback}")


@dataclass(frozen=True)
class StepReport:
    """Per-point outcome. Optional fields stay None until the phase that fills them."""

    time_point: int
    observed: float
    predicted: float | None
    aare: float | None
    threshold: float | None
    verdict: Verdict
    retrained: bool
    re_predicted: bool
    decision_latency: float  # seconds, wall time of the step call


class Detector:
    """Sequential detector over one stream; feed points in index order."""

    def __init__(self, config: DetectorConfig):
        self.config = config
        b = config.lookback
        self._b = b
        self._train_start = b - 1
        self._aare_start = 2 * b - 1
        self._detect_start = 2 * b + 1
        if config.algorithm is Algorithm.REPAD2:
            self.tracker = WindowedTracker(config.window)
        else:
            self.tracker = AllHistoryTracker(store_values=config.store_history)
        self._predictor = config.predictor or LstmPredictor(config.lstm)
        self._values: deque[float] = deque(maxlen=b + 1)
        self._predictions: dict[int, float] = {}
        self._model: Any = None
        self._flag = True
        self._t_next = 0
        self.points_seen = 0
        self.warmup_train_count = 0
        self.retrain_count = 0
        self.anomaly_count = 0

    @property
    def flag(self) -> bool:
        return self._flag

    @property
    def model(self) -> Any:
        return self._model

    @property
    def next_index(self) -> int:
        return self._t_next

    def _recent_before_current(self) -> list[float]:
        """The b values preceding the current point (excludes it)."""
        return list(self._values)[:self._b]

    def _last_b(self) -> list[float]:
        """The b most recent values (includes the current point)."""
        return list(self._values)[-self._b:]

    def step(self, point: TimeSeriesPoint) -> StepReport:
        start = time.perf_counter()
        t = point.index
        if t != self._t_next:
            raise StreamOrderError(f"expected point index {self._t_next}, got {t}")
        if not math.isfinite(point.value):
            raise DataFormatError(f"non-finite value at index {t}")
        self._t_next += 1
        self.points_seen += 1
        self._values.append(point.value)

        aare = None
        thd = None
        verdict = Verdict.WARMUP
        retrained = False
        re_predicted = False

        if t < self._train_start:
            pass  # collect only
        elif t < self._aare_start:
            self._train_and_predict_ahead(t)
        elif t < self._detect_start:
            aare = self._compute_aare(t)
            self.tracker.push(aare)
            self._train_and_predict_ahead(t)
        elif self._flag:
            if t != self._detect_start:
                # at the first detection point the forecast already exists
                self._predictions[t] = self._predictor.predict(
                    self._model, self._recent_before_current(), t
                )
            aare = self._compute_aare(t)
            self.tracker.push(aare)
            thd = self.tracker.threshold()
            if aare.value <= thd:
                verdict = Verdict.NORMAL
            else:
                # one chance to adapt: retrain on the b points before t,
                # re-predict, and re-judge with the replaced error value
                retrained = True
                re_predicted = True
                self.retrain_count += 1
                recent = self._recent_before_current()
                candidate = self._predictor.train(recent)
                self._predictions[t] = self._predictor.predict(candidate, recent, t)
                aare = self._compute_aare(t)
                self.tracker.replace_last(aare)
                thd = self.tracker.threshold()
                if aare.value <= thd:
                    verdict = Verdict.NORMAL
                    self._model = candidate
                else:
                    verdict = Verdict.ANOMALY
                    self._flag = False  # candidate model is discarded
        else:
            retrained = True
            self.retrain_count += 1
            recent = self._recent_before_current()
            candidate = self._predictor.train(recent)
            self._predictions[t] = self._predictor.predict(candidate, recent, t)
            aare = self._compute_aare(t)
            self.tracker.push(aare)
            thd = self.tracker.threshold()
            if aare.value <= thd:
                verdict = Verdict.NORMAL
                self._model = candidate
                self._flag = True
            else:
                verdict = Verdict.ANOMALY

        if verdict is Verdict.ANOMALY:
            self.anomaly_count += 1
        predicted = self._predictions.get(t)
        self._prune_predictions(t)
        return StepReport(
            time_point=t,
            observed=point.value,
            predicted=predicted,
            aare=aare.value if aare is not None else None,
            threshold=thd,
            verdict=verdict,
            retrained=retrained,
            re_predicted=re_predicted,
            decision_latency=time.perf_counter() - start,
        )

    def _train_and_predict_ahead(self, t: int) -> None:
        window = self._last_b()
        self._model = self._predictor.train(window)
        self.warmup_train_count += 1
        self._predictions[t + 1] = self._predictor.predict(self._model, window, t + 1)

    def _compute_aare(self, t: int):
        observed = self._last_b()
        predicted = [self._predictions[y] for y in range(t - self._b + 1, t + 1)]
        return compute_aare(observed, predicted, time_point=t)

    def _prune_predictions(self, t: int) -> None:
        # the next AARE needs forecasts for t-b+2 .. t+1 only
        for key in [k for k in self._predictions if k < t - self._b + 2]:
            del self._predictions[key]


def run_stream(config: DetectorConfig, series: TimeSeries) -> list[StepReport]:
    """Batch driver: one report per point, same as repeated step() calls."""
    det = Detector(config)
    return [det.step(p) for p in series]


def retraining_ratio(reports: Sequence[StepReport]) -> float:
    """Fraction of points that triggered a conditional retrain.

    Warm-up trainings do not count; only the retrain branches taken in
    the detection phase do.
    """
    if not reports:
        raise DataFormatError("retraining_ratio of an empty report list")
    return sum(1 for r in reports if r.retrained) / len(reports)
