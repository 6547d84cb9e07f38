"""Detection scoring against expert labels.

A labeled anomaly spanning [s, e] counts as detected when at least one
detection lands inside its acceptance window [s-K, e+K]. Extra
detections inside a credited window are absorbed. Detections outside
every window are false positives; by default a maximal run of
consecutive stray indices counts as a single false positive (one
sustained false alarm, not dozens), with a per-detection mode available
for sensitivity checks.
"""

from __future__ import annotations

import statistics
from dataclasses import dataclass
from typing import Sequence

from .detector import StepReport, Verdict, retraining_ratio
from .errors import ConfigError, DataFormatError
from .series_io import LabelSet


@dataclass(frozen=True)
class MatchConfig:
    k: int = 7
    fp_mode: str = "runs"  # "runs" or "each"

    def __post_init__(self) -> None:
        if self.k < 0:
            raise ConfigError(f"K must be >= 0, got {self.k}")
        if self.fp_mode not in ("runs", "each"):
            raise ConfigError(f"fp_mode must be 'runs' or 'each', got {self.fp_mode!r}")


@dataclass(frozen=True)
class EvalCounts:
    tp: int
    fp: int
    fn: int


@dataclass(frozen=True)
class EvalSummary:
    precision: float
    recall: float
    f_score: float
    counts: EvalCounts
    retraining_ratio: float
    latency_retrain: tuple[float, float] | None  # (mean, stddev) seconds
    latency_noretrain: tuple[float, float] | None

    def as_dict(self) -> dict:
        return {
            "precision": self.precision,
            "recall": self.recall,
            "f_score": self.f_score,
            "tp": self.counts.tp,
            "fp": self.counts.fp,
            "fn": self.counts.fn,
            "retraining_ratio": self.retraining_ratio,
            "latency_retrain_mean_s": self.latency_retrain[0] if self.latency_retrain else None,
            "latency_retrain_std_s": self.latency_retrain[1] if self.latency_retrain else None,
            "latency_noretrain_mean_s": self.latency_noretrain[0] if self.latency_noretrain else None,
            "latency_noretrain_std_s": self.latency_noretrain[1] if self.latency_noretrain else None,
        }


def match_detections(
    detections: Sequence[int], labels: LabelSet, cfg: MatchConfig = MatchConfig()
) -> EvalCounts:
    """Count TP/FP/FN with K-window matching.

    Each detection credits the earliest not-yet-credited label whose
    window contains it (the classic interval greedy, so the number of
    credited labels is maximal and monotone in K). A detection covered
    only by already-credited windows is absorbed, not a false positive.
    """
    if any(b < a for a, b in zip(detections, detections[1:])):
        raise DataFormatError("detections must be sorted ascending")
    k = cfg.k
    labs = labels.anomalies
    tp = 0
    stray: list[int] = []
    j = 0
    last_credited_end: int | None = None
    for d in detections:
        while j < len(labs) and labs[j].end + k < d:
            j += 1
        if j < len(labs) and labs[j].start - k <= d:
            tp += 1
            last_credited_end = labs[j].end + k
            j += 1
        elif last_credited_end is not None and d <= last_credited_end:
            pass  # absorbed by a window that already has its detection
        else:
            stray.append(d)
    fn = len(labs) - tp
    if cfg.fp_mode == "each":
        fp = len(stray)
    else:
        fp = sum(1 for i, d in enumerate(stray) if i == 0 or d != stray[i - 1] + 1)
    return EvalCounts(tp=tp, fp=fp, fn=fn)


def score(counts: EvalCounts) -> tuple[float, float, float]:
    """Precision, recall, F-score.

    Conventions: with no detections at all, precision is 1 only when
    there were also no labels (vacuously perfect), otherwise 0. Recall
    over zero labels is 1. F is 0 when precision + recall is 0.
    """
    if counts.tp + counts.fp == 0:
        precision = 1.0 if counts.fn == 0 else 0.0
    else:
        precision = counts.tp / (counts.tp + counts.fp)
    recall = 1.0 if counts.tp + counts.fn == 0 else counts.tp / (counts.tp + counts.fn)
    f = 0.0 if precision + recall == 0 else 2.0 * precision * recall / (precision + recall)
    return precision, recall, f


def latency_stats(latencies: list[float]) -> tuple[float, float] | None:
    if not latencies:
        return None
    return statistics.fmean(latencies), statistics.pstdev(latencies)


def summarize(
    reports: Sequence[StepReport], labels: LabelSet, cfg: MatchConfig = MatchConfig()
) -> EvalSummary:
    """Score one full run and fold in retraining and latency statistics.

    Latency statistics cover decision-phase points only (warm-up steps
    always train and would skew the no-retrain column).
    """
    if not reports:
        raise DataFormatError("summarize needs at least one report")
    last_t = reports[-1].time_point
    for lab in labels:
        if lab.end > last_t:
            raise DataFormatError(
                f"label ({lab.start},{lab.end}) beyond the report range (last index {last_t})"
            )
    detections = [r.time_point for r in reports if r.verdict is Verdict.ANOMALY]
    counts = match_detections(detections, labels, cfg)
    precision, recall, f = score(counts)
    decided = [r for r in reports if r.verdict is not Verdict.WARMUP]
    return EvalSummary(
        precision=precision,
        recall=recall,
        f_score=f,
        counts=counts,
        retraining_ratio=retraining_ratio(reports),
        latency_retrain=latency_stats([r.decision_latency for r in decided if r.retrained]),
        latency_noretrain=latency_stats([r.decision_latency for r in decided if not r.retrained]),
    )
