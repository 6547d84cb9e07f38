"""HTTP service wrapping the detector for long-running, multi-stream use.

Each session owns one sequential detector; clients feed points with
POST /sessions/{id}/step (or /stream for a batch) and get the verdict
back immediately. Stateless helpers cover whole-series detection,
scoring, and synthetic data generation. Sessions live in process
memory; this service is a front end for live streams, not a database.
"""

from __future__ import annotations

import threading
import uuid

from fastapi import FastAPI, HTTPException

from .. import __version__, detector, evaluation, series_io
from ..errors import ConfigError, RepadError, StreamOrderError
from ..lstm_core import LstmConfig
from . import schemas


class _Session:
    def __init__(self, session_id: str, spec: schemas.DetectorSpec, det: detector.Detector):
        self.session_id = session_id
        self.spec = spec
        self.detector = det
        self.lock = threading.Lock()  # a detector is strictly sequential

    def info(self) -> schemas.SessionOut:
        det = self.detector
        return schemas.SessionOut(
            session_id=self.session_id,
            spec=self.spec,
            next_index=det.next_index,
            flag=det.flag,
            points_seen=det.points_seen,
            retrain_events=det.retrain_count,
            anomaly_count=det.anomaly_count,
            retained_aare_count=det.tracker.retained_count(),
        )


def _build_detector(spec: schemas.DetectorSpec, series_values=None) -> detector.Detector:
    lstm = LstmConfig(
        hidden_units=spec.hidden_units,
        max_epochs=spec.max_epochs,
        learning_rate=spec.learning_rate,
        seed=spec.seed,
    )
    predictor = None
    if spec.predictor != "lstm":
        predictor = detector.build_predictor(spec.predictor, lstm, series_values)
    config = detector.DetectorConfig(
        algorithm=detector.Algorithm(spec.algorithm),
        window=spec.window,
        lookback=spec.lookback,
        lstm=lstm,
        predictor=predictor,
        store_history=spec.store_history,
    )
    return detector.Detector(config)


def _report_out(report: detector.StepReport) -> schemas.StepReportOut:
    return schemas.StepReportOut(
        time_point=report.time_point,
        observed=report.observed,
        predicted=report.predicted,
        aare=report.aare,
        threshold=report.threshold,
        verdict=report.verdict.value,
        retrained=report.retrained,
        re_predicted=report.re_predicted,
        decision_latency=report.decision_latency,
    )


def create_app() -> FastAPI:
    app = FastAPI(title="repad2", version=__version__)
    sessions: dict[str, _Session] = {}
    registry_lock = threading.Lock()

    def _get(session_id: str) -> _Session:
        session = sessions.get(session_id)
        if session is None:
            raise HTTPException(status_code=404, detail=f"no session {session_id}")
        return session

    @app.get("/health", response_model=schemas.HealthOut)
    def health() -> schemas.HealthOut:
        return schemas.HealthOut(status="ok", version=__version__)

    @app.post("/sessions", response_model=schemas.SessionOut, status_code=201)
    def create_session(spec: schemas.DetectorSpec) -> schemas.SessionOut:
        if spec.predictor == "stub:perfect":
            raise HTTPException(
                status_code=400, detail="stub:perfect needs the full series; use /detect"
            )
        try:
            det = _build_detector(spec)
        except ConfigError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        session = _Session(uuid.uuid4().hex, spec, det)
        with registry_lock:
            sessions[session.session_id] = session
        return session.info()

    @app.get("/sessions", response_model=schemas.SessionListOut)
    def list_sessions() -> schemas.SessionListOut:
        with registry_lock:
            return schemas.SessionListOut(sessions=[s.info() for s in sessions.values()])

    @app.get("/sessions/{session_id}", response_model=schemas.SessionOut)
    def session_info(session_id: str) -> schemas.SessionOut:
        return _get(session_id).info()

    @app.delete("/sessions/{session_id}", status_code=204)
    def delete_session(session_id: str) -> None:
        _get(session_id)
        with registry_lock:
            sessions.pop(session_id, None)

    @app.post("/sessions/{session_id}/step", response_model=schemas.StepReportOut)
    def step(session_id: str, point: schemas.PointIn) -> schemas.StepReportOut:
        session = _get(session_id)
        pt = series_io.TimeSeriesPoint(
            index=point.index, value=point.value, timestamp=point.timestamp
        )
        with session.lock:
            try:
                report = session.detector.step(pt)
            except StreamOrderError as exc:
                raise HTTPException(status_code=409, detail=str(exc))
            except RepadError as exc:
                raise HTTPException(status_code=400, detail=str(exc))
        return _report_out(report)

    @app.post("/sessions/{session_id}/stream", response_model=schemas.StreamOut)
    def stream(session_id: str, body: schemas.StreamIn) -> schemas.StreamOut:
        session = _get(session_id)
        out = []
        with session.lock:
            for point in body.points:
                pt = series_io.TimeSeriesPoint(
                    index=point.index, value=point.value, timestamp=point.timestamp
                )
                try:
                    out.append(_report_out(session.detector.step(pt)))
                except StreamOrderError as exc:
                    raise HTTPException(status_code=409, detail=str(exc))
                except RepadError as exc:
                    raise HTTPException(status_code=400, detail=str(exc))
        return schemas.StreamOut(reports=out)

    @app.post("/detect", response_model=schemas.StreamOut)
    def detect(body: schemas.DetectRequest) -> schemas.StreamOut:
        series = series_io.TimeSeries.from_values(body.values)
        try:
            det = _build_detector(body.spec, series_values=body.values)
            reports = [det.step(p) for p in series]
        except RepadError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        return schemas.StreamOut(reports=[_report_out(r) for r in reports])

    @app.post("/evaluate", response_model=schemas.EvaluateOut)
    def evaluate(body: schemas.EvaluateRequest) -> schemas.EvaluateOut:
        try:
            labels = series_io.LabelSet(
                anomalies=tuple(
                    sorted(series_io.AnomalyLabel(lab.start, lab.end) for lab in body.labels)
                )
            )
            counts = evaluation.match_detections(
                sorted(body.detections), labels, evaluation.MatchConfig(k=body.k, fp_mode=body.fp_mode)
            )
        except RepadError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        precision, recall, f = evaluation.score(counts)
        return schemas.EvaluateOut(
            tp=counts.tp, fp=counts.fp, fn=counts.fn,
            precision=precision, recall=recall, f_score=f,
        )

    @app.post("/synth", response_model=schemas.SynthOut)
    def synth(body: schemas.SynthRequest) -> schemas.SynthOut:
        try:
            spec = series_io.SyntheticSpec(
                length=body.length,
                period=body.period,
                amplitude=body.amplitude,
                offset=body.offset,
                noise_sigma=body.noise_sigma,
                spikes=tuple((i, m) for i, m in body.spikes),
                seed=body.seed,
            )
            series, labels = series_io.generate_synthetic(spec)
        except RepadError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        return schemas.SynthOut(
            values=series.values(),
            labels=[schemas.LabelIn(start=l.start, end=l.end) for l in labels],
        )

    return app


app = create_app()
