"""Pydantic request/response models for the detection service."""

from __future__ import annotations

from datetime import datetime
from typing import Literal

from pydantic import BaseModel, Field


class DetectorSpec(BaseModel):
    algorithm: Literal["repad", "repad2"] = "repad2"
    window: int | None = Field(default=None, description="sliding window W (repad2 only)")
    lookback: int = 3
    seed: int = 140
    hidden_units: int = 10
    max_epochs: int = 50
    learning_rate: float = 0.005
    store_history: bool = False
    predictor: str = Field(default="lstm", description="lstm, stub:previous, or stub:perfect")


class PointIn(BaseModel):
    index: int = Field(ge=0)
    value: float
    timestamp: datetime | None = None


class StreamIn(BaseModel):
    points: list[PointIn]


class StepReportOut(BaseModel):
    time_point: int
    observed: float
    predicted: float | None
    aare: float | None
    threshold: float | None
    verdict: Literal["warmup", "normal", "anomaly"]
    retrained: bool
    re_predicted: bool
    decision_latency: float


class StreamOut(BaseModel):
    reports: list[StepReportOut]


class SessionOut(BaseModel):
    session_id: str
    spec: DetectorSpec
    next_index: int
    flag: bool
    points_seen: int
    retrain_events: int
    anomaly_count: int
    retained_aare_count: int


class SessionListOut(BaseModel):
    sessions: list[SessionOut]


class DetectRequest(BaseModel):
    spec: DetectorSpec = Field(default_factory=DetectorSpec)
    values: list[float]


class LabelIn(BaseModel):
    start: int = Field(ge=0)
    end: int = Field(ge=0)


class EvaluateRequest(BaseModel):
    detections: list[int]
    labels: list[LabelIn]
    k: int = 7
    fp_mode: Literal["runs", "each"] = "runs"


class EvaluateOut(BaseModel):
    tp: int
    fp: int
    fn: int
    precision: float
    recall: float
    f_score: float


class SynthRequest(BaseModel):
    length: int = 2880
    period: float = 288.0
    amplitude: float = 10.0
    offset: float = 30.0
    noise_sigma: float = 0.2
    spikes: list[tuple[int, float]] = Field(default_factory=list)
    seed: int = 140


class SynthOut(BaseModel):
    values: list[float]
    labels: list[LabelIn]


class HealthOut(BaseModel):
    status: str
    version: str
