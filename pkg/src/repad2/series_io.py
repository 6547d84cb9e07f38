"""Time-series and label ingestion, series extension, synthetic streams.

Input format is the NAB-style two-column CSV (``timestamp,value``).
Labels are plain text files with one inclusive index range per line
(``start,end``), ``#`` comments allowed.

Timestamps are informational only; every algorithm in this package works
on the integer point index.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from datetime import datetime, timedelta
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import ConfigError, DataFormatError

logger = logging.getLogger("repad2.series_io")

CSV_HEADER = ("timestamp", "value")


@dataclass(frozen=True)
class TimeSeriesPoint:
    """One observation: integer time point plus the observed value."""

    index: int
    value: float
    timestamp: datetime | None = None


@dataclass(frozen=True)
class TimeSeries:
    points: tuple[TimeSeriesPoint, ...]

    def __len__(self) -> int:
        return len(self.points)

    def __iter__(self) -> Iterator[TimeSeriesPoint]:
        return iter(self.points)

    def __getitem__(self, i: int) -> TimeSeriesPoint:
        return self.points[i]

    def values(self) -> list[float]:
        return [p.value for p in self.points]

    def sampling_interval(self) -> timedelta | None:
        """Interval between the first two timestamped points, if known."""
        if len(self.points) < 2:
            return None
        t0, t1 = self.points[0].timestamp, self.points[1].timestamp
        if t0 is None or t1 is None:
            return None
        return t1 - t0

    @staticmethod
    def from_values(
        values: Sequence[float],
        start: datetime | None = None,
        interval: timedelta | None = None,
    ) -> "TimeSeries":
        pts = []
        for i, v in enumerate(values):
            ts = start + i * interval if start is not None and interval is not None else None
            pts.append(TimeSeriesPoint(index=i, value=float(v), timestamp=ts))
        return TimeSeries(points=tuple(pts))


@dataclass(frozen=True, order=True)
class AnomalyLabel:
    """Inclusive index range; start == end marks a point anomaly."""

    start: int
    end: int

    def __post_init__(self) -> None:
        if self.start < 0 or self.end < self.start:
            raise DataFormatError(f"invalid label range ({self.start}, {self.end})")

    def is_point(self) -> bool:
        return self.start == self.end


@dataclass(frozen=True)
class LabelSet:
    anomalies: tuple[AnomalyLabel, ...]

    def __post_init__(self) -> None:
        for prev, cur in zip(self.anomalies, self.anomalies[1:]):
            if cur.start <= prev.end:
                raise DataFormatError(
                    f"labels overlap or are unsorted: ({prev.start},{prev.end}) then ({cur.start},{cur.end})"
                )

    def __len__(self) -> int:
        return len(self.anomalies)

    def __iter__(self) -> Iterator[AnomalyLabel]:
        return iter(self.anomalies)


def load_series(path: str | Path) -> TimeSeries:
    """Load a NAB-format CSV. Rejects non-finite values, reports bad rows by line."""
    path = Path(path)
    points: list[TimeSeriesPoint] = []
    zero_count = 0
    with open(path, newline="") as fh:
        reader = enumerate(csv.reader(fh), start=1)
        header = None
        for _lineno, row in reader:
            if not row or row[0].lstrip().startswith("#"):
                continue  # manifest/comment lines
            header = row
            break
        if header is None:
            raise DataFormatError(f"{path}: empty file, expected header 'timestamp,value'")
        if tuple(h.strip().lower() for h in header) != CSV_HEADER:
            raise DataFormatError(f"{path}: expected header 'timestamp,value', got {header!r}")
        for lineno, row in reader:
            if not row or row[0].lstrip().startswith("#"):
                continue
            if len(row) != 2:
                raise DataFormatError(f"{path}:{lineno}: expected 2 columns, got {len(row)}")
            ts_cell, value_cell = row[0].strip(), row[1].strip()
            timestamp = None
            if ts_cell:
                try:
                    timestamp = datetime.fromisoformat(ts_cell)
                except ValueError:
                    raise DataFormatError(f"{path}:{lineno}: bad timestamp {ts_cell!r}")
            try:
                value = float(value_cell)
            except ValueError:
                raise DataFormatError(f"{path}:{lineno}: bad value {value_cell!r}")
            if not math.isfinite(value):
                raise DataFormatError(f"{path}:{lineno}: non-finite value {value_cell!r}")
            if value == 0.0:
                zero_count += 1
            points.append(TimeSeriesPoint(index=len(points), value=value, timestamp=timestamp))
    if zero_count:
        logger.warning(
            "%s: %d zero values; relative errors at those points fall back to the epsilon guard",
            path, zero_count,
        )
    return TimeSeries(points=tuple(points))


def write_series(path: str | Path, series: TimeSeries, header_lines: Iterable[str] = ()) -> None:
    """Write a series back out in NAB CSV format, values at full precision."""
    with open(path, "w", newline="") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        fh.write("timestamp,value\n")
        for p in series:
            ts = f"{p.timestamp:%Y-%m-%d %H:%M:%S}" if p.timestamp is not None else ""
            fh.write(f"{ts},{p.value!r}\n")


def load_labels(path: str | Path) -> LabelSet:
    """Load 'start,end' index ranges; '#' comments and blank lines are skipped."""
    path = Path(path)
    labels = []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = [p.strip() for p in line.split(",")]
            if len(parts) != 2:
                raise DataFormatError(f"{path}:{lineno}: expected 'start,end', got {raw.rstrip()!r}")
            try:
                start, end = int(parts[0]), int(parts[1])
            except ValueError:
                raise DataFormatError(f"{path}:{lineno}: non-integer label index in {raw.rstrip()!r}")
            labels.append(AnomalyLabel(start=start, end=end))
    return LabelSet(anomalies=tuple(sorted(labels)))


def write_labels(path: str | Path, labels: LabelSet, header_lines: Iterable[str] = ()) -> None:
    with open(path, "w") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        for lab in labels:
            fh.write(f"{lab.start},{lab.end}\n")


def extend_series(series: TimeSeries, copies: int) -> TimeSeries:
    """Concatenate ``copies`` back-to-back repetitions of ``series``.

    Timestamps are regenerated at the source sampling interval so the
    result reads as one continuous stream rather than repeating calendar
    dates.
    """
    if copies < 1:
        raise ConfigError(f"copies must be >= 1, got {copies}")
    n = len(series)
    interval = series.sampling_interval()
    start = series.points[0].timestamp if n and interval is not None else None
    points = []
    for k in range(copies):
        for p in series:
            i = k * n + p.index
            ts = start + i * interval if start is not None else None
            points.append(TimeSeriesPoint(index=i, value=p.value, timestamp=ts))
    return TimeSeries(points=tuple(points))


def extend_labels(labels: LabelSet, series_len: int, copies: int) -> LabelSet:
    """Replicate each label once per copy, shifted by the source length."""
    if copies < 1:
        raise ConfigError(f"copies must be >= 1, got {copies}")
    for lab in labels:
        if lab.end >= series_len:
            raise DataFormatError(
                f"label ({lab.start},{lab.end}) out of range for series of length {series_len}"
            )
    shifted = [
        AnomalyLabel(start=lab.start + k * series_len, end=lab.end + k * series_len)
        for k in range(copies)
        for lab in labels
    ]
    return LabelSet(anomalies=tuple(sorted(shifted)))


@dataclass(frozen=True)
class SyntheticSpec:
    """Sinusoid + Gaussian noise + injected point spikes.

    A spike replaces noise at its index: the stored value is exactly
    ``clean + magnitude``, so labels are checkable against the clean
    signal.
    """

    length: int = 2880
    period: float = 288.0
    amplitude: float = 10.0
    offset: float = 30.0
    noise_sigma: float = 0.2
    spikes: tuple[tuple[int, float], ...] = ()
    seed: int = 140
    interval_minutes: int = 5
    start: datetime = field(default=datetime(2020, 1, 1))

    def __post_init__(self) -> None:
        if self.length <= 0:
            raise ConfigError(f"length must be > 0, got {self.length}")
        if self.period <= 0:
            raise ConfigError(f"period must be > 0, got {self.period}")
        if self.noise_sigma < 0:
            raise ConfigError(f"noise_sigma must be >= 0, got {self.noise_sigma}")
        seen = set()
        for idx, _mag in self.spikes:
            if not 0 <= idx < self.length:
                raise ConfigError(f"spike index {idx} out of range [0, {self.length})")
            if idx in seen:
                raise ConfigError(f"duplicate spike index {idx}")
            seen.add(idx)


def generate_synthetic(spec: SyntheticSpec) -> tuple[TimeSeries, LabelSet]:
    """Deterministic labeled stream for desk-scale tests.

    Raises ConfigError if any generated value is <= 0, since downstream
    relative errors divide by the observed value.
    """
    rng = np.random.default_rng(spec.seed)
    i = np.arange(spec.length)
    clean = spec.offset + spec.amplitude * np.sin(2.0 * np.pi * i / spec.period)
    values = clean + rng.normal(0.0, spec.noise_sigma, spec.length)
    for idx, mag in spec.spikes:
        values[idx] = clean[idx] + mag
    if values.min() <= 0.0:
        raise ConfigError(
            "synthetic configuration produced non-positive values; raise the offset "
            f"(min value {values.min():.6g})"
        )
    series = TimeSeries.from_values(
        values.tolist(),
        start=spec.start,
        interval=timedelta(minutes=spec.interval_minutes),
    )
    labels = LabelSet(
        anomalies=tuple(AnomalyLabel(start=idx, end=idx) for idx, _ in sorted(spec.spikes))
    )
    return series, labels
