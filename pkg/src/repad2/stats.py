"""Average absolute relative error and the adaptive three-sigma threshold.

Two tracker flavors share one interface:

* ``AllHistoryTracker`` keeps constant-space streaming accumulators over
  every error value it has ever seen (optionally storing them all, to
  demonstrate how unbounded history grows on an open-ended stream).
* ``WindowedTracker`` keeps a ring of at most W values and computes the
  threshold over the retained window only, so memory stays bounded no
  matter how long the stream runs.

Both report the population standard deviation (divide by the count, not
count - 1), and both define the threshold as mean + 3 * sigma once at
least three values have been recorded.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from typing import Sequence

from .errors import ConfigError, DataFormatError, ThresholdUndefinedError

AARE_EPSILON = 1e-9

# Ring-sum error control. The running sums are exact enough as long as
# the stored magnitudes stay comparable; a periodic recompute bounds
# accumulation, and the shrink trigger catches catastrophic cancellation
# when large values leave the window. Together they keep the threshold
# within ~1e-10 relative of a from-scratch recomputation.
_RECOMPUTE_EVERY = 512
_SHRINK_TRIGGER = 2.0 ** -9
# One-shot cancellation guard for var = sumsq/n - mean^2: below this
# ratio the subtraction itself is untrustworthy and we recompute centered.
_VARIANCE_TRUST = 4.4e-6

SIGMA_MULTIPLIER = 3.0
MIN_COUNT_FOR_THRESHOLD = 3


@dataclass(frozen=True)
class AareValue:
    """One error observation, tagged with the time point it was computed at."""

    value: float
    time_point: int
    guarded: bool = False


def compute_aare(
    observed: Sequence[float], predicted: Sequence[float], time_point: int = 0
) -> AareValue:
    """Mean of |observed - predicted| / max(|observed|, epsilon).

    ``guarded`` is set when any denominator hit the epsilon floor (an
    observed value at or near zero).
    """
    if len(observed) != len(predicted) or not observed:
        raise DataFormatError(
            f"observed/predicted length mismatch: {len(observed)} vs {len(predicted)}"
        )
    total = 0.0
    guarded = False
    for obs, pred in zip(observed, predicted):
        if not (math.isfinite(obs) and math.isfinite(pred)):
            raise DataFormatError("non-finite value in AARE input")
        denom = abs(obs)
        if denom < AARE_EPSILON:
            denom = AARE_EPSILON
            guarded = True
        total += abs(obs - pred) / denom
    return AareValue(value=total / len(observed), time_point=time_point, guarded=guarded)


class AllHistoryTracker:
    """Streaming mean/std over every value pushed (Welford accumulators).

    The newest value is kept aside and only folded into the accumulators
    when the next one arrives, so replace_last never has to unwind a
    Welford update (removal of a large transient would poison the
    accumulators at the eps * value^2 level). Queries merge the pending
    value on the fly.

    With ``store_values=True`` every value is also retained, making the
    memory growth of the unbounded design observable.
    """

    def __init__(self, store_values: bool = False):
        self._n = 0  # values folded into the accumulators (excludes pending)
        self._mean = 0.0
        self._m2 = 0.0
        self._pending: AareValue | None = None
        self._store = [] if store_values else None

    @property
    def count(self) -> int:
        return self._n + (self._pending is not None)

    def retained_count(self) -> int:
        """Number of history values actually held in memory."""
        return len(self._store) if self._store is not None else 0

    def values(self) -> list[float]:
        if self._store is None:
            raise ConfigError("tracker was not created with store_values=True")
        return [a.value for a in self._store]

    def push(self, aare: AareValue) -> None:
        if self._pending is not None:
            value = self._pending.value
            self._n += 1
            delta = value - self._mean
            self._mean += delta / self._n
            self._m2 += delta * (value - self._mean)
        self._pending = aare
        if self._store is not None:
            self._store.append(aare)

    def replace_last(self, aare: AareValue) -> None:
        """Overwrite the most recent value; the count does not change."""
        if self._pending is None:
            raise DataFormatError("replace_last before any push")
        if aare.time_point != self._pending.time_point:
            raise DataFormatError(
                f"replace_last time point {aare.time_point} != last pushed {self._pending.time_point}"
            )
        self._pending = aare
        if self._store is not None:
            self._store[-1] = aare

    def _merged(self) -> tuple[int, float, float]:
        """(count, mean, m2) with the pending value folded in, non-destructively."""
        if self._pending is None:
            return self._n, self._mean, self._m2
        n = self._n + 1
        delta = self._pending.value - self._mean
        mean = self._mean + delta / n
        m2 = self._m2 + delta * (self._pending.value - mean)
        return n, mean, m2

    def mean(self) -> float:
        n, mean, _ = self._merged()
        if n == 0:
            raise ThresholdUndefinedError("no values pushed")
        return mean

    def std(self) -> float:
        n, _, m2 = self._merged()
        if n == 0:
            raise ThresholdUndefinedError("no values pushed")
        return math.sqrt(max(m2, 0.0) / n)

    def threshold(self) -> float:
        n, mean, m2 = self._merged()
        if n < MIN_COUNT_FOR_THRESHOLD:
            raise ThresholdUndefinedError(
                f"threshold needs >= {MIN_COUNT_FOR_THRESHOLD} values, have {n}"
            )
        return mean + SIGMA_MULTIPLIER * math.sqrt(max(m2, 0.0) / n)


class WindowedTracker:
    """Ring of the W most recent values; threshold over the retained window.

    Running sum and sum of squares give O(1) updates; exact recomputes
    (periodic, and whenever cancellation could bite) bound the error.
    """

    def __init__(self, window: int):
        if window < 1:
            raise ConfigError(f"window must be >= 1, got {window}")
        self.window = window
        self._buf: deque[AareValue] = deque(maxlen=window)
        self._sum = 0.0
        self._sumsq = 0.0
        self._sumsq_peak = 0.0
        self._n_total = 0
        self._ops = 0

    @property
    def count(self) -> int:
        return self._n_total

    def retained_count(self) -> int:
        return len(self._buf)

    def values(self) -> list[float]:
        return [a.value for a in self._buf]

    def retained(self) -> list[AareValue]:
        return list(self._buf)

    def push(self, aare: AareValue) -> None:
        if len(self._buf) == self.window:
            evicted = self._buf[0].value
            self._sum -= evicted
            self._sumsq -= evicted * evicted
        self._buf.append(aare)
        self._sum += aare.value
        self._sumsq += aare.value * aare.value
        self._n_total += 1
        self._tick()

    def replace_last(self, aare: AareValue) -> None:
        """Overwrite the most recent value; the count does not change."""
        if not self._buf:
            raise DataFormatError("replace_last before any push")
        old = self._buf[-1]
        if aare.time_point != old.time_point:
            raise DataFormatError(
                f"replace_last time point {aare.time_point} != last pushed {old.time_point}"
            )
        self._sum += aare.value - old.value
        self._sumsq += aare.value * aare.value - old.value * old.value
        self._buf[-1] = aare
        self._tick()

    def _tick(self) -> None:
        self._ops += 1
        if self._sumsq > self._sumsq_peak:
            self._sumsq_peak = self._sumsq
        if self._ops >= _RECOMPUTE_EVERY or self._sumsq < self._sumsq_peak * _SHRINK_TRIGGER:
            self._recompute()

    def _recompute(self) -> None:
        self._sum = math.fsum(a.value for a in self._buf)
        self._sumsq = math.fsum(a.value * a.value for a in self._buf)
        self._sumsq_peak = self._sumsq
        self._ops = 0

    def mean(self) -> float:
        if not self._buf:
            raise ThresholdUndefinedError("no values pushed")
        return self._sum / len(self._buf)

    def _variance(self) -> float:
        n = len(self._buf)
        mean = self._sum / n
        var = self._sumsq / n - mean * mean
        if var <= mean * mean * _VARIANCE_TRUST:
            # near-constant window: the subtraction loses everything, so
            # take the centered two-pass answer instead
            values = [a.value for a in self._buf]
            exact_mean = math.fsum(values) / n
            var = math.fsum((v - exact_mean) ** 2 for v in values) / n
        return max(var, 0.0)

    def std(self) -> float:
        if not self._buf:
            raise ThresholdUndefinedError("no values pushed")
        return math.sqrt(self._variance())

    def threshold(self) -> float:
        if self._n_total < MIN_COUNT_FOR_THRESHOLD:
            raise ThresholdUndefinedError(
                f"threshold needs >= {MIN_COUNT_FOR_THRESHOLD} values, have {self._n_total}"
            )
        return self.mean() + SIGMA_MULTIPLIER * self.std()


ThresholdTracker = AllHistoryTracker | WindowedTracker
