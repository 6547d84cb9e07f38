"""Naive reference interpreter used as a test oracle.

A direct, stateful transcription of the published detection loop:
plain lists, full-history slices, and from-scratch mean/std at every
step. It deliberately shares no code with repad2.detector or
repad2.stats, so agreement between the two is meaningful.
"""

import numpy as np


def reference_run(values, predictor, window=None, lookback=3):
    """Run the straight-line detection loop over ``values``.

    ``window=None`` reproduces the all-history threshold; an integer
    reproduces the sliding-window threshold. Returns one
    (verdict, flag_after, retrained) triple per point, with verdicts
    'warmup' / 'normal' / 'anomaly'.
    """
    b = lookback
    aares: list[float] = []  # every error value ever computed, in order
    preds: dict[int, float] = {}
    flag = True
    model = None
    out = []

    def aare_at(t):
        total = 0.0
        for y in range(t - b + 1, t + 1):
            total += abs(values[y] - preds[y]) / max(abs(values[y]), 1e-9)
        return total / b

    def thd():
        hist = aares if window is None else aares[-window:]
        arr = np.asarray(hist)
        return float(arr.mean() + 3.0 * arr.std())

    for t in range(len(values)):
        verdict = "warmup"
        retrained = False
        if t < b - 1:
            pass
        elif t < 2 * b - 1:
            model = predictor.train(values[t - b + 1:t + 1])
            preds[t + 1] = predictor.predict(model, values[t - b + 1:t + 1], t + 1)
        elif t < 2 * b + 1:
            aares.append(aare_at(t))
            model = predictor.train(values[t - b + 1:t + 1])
            preds[t + 1] = predictor.predict(model, values[t - b + 1:t + 1], t + 1)
        elif flag:
            if t != 2 * b + 1:
                preds[t] = predictor.predict(model, values[t - b:t], t)
            aares.append(aare_at(t))
            if aares[-1] <= thd():
                verdict = "normal"
            else:
                retrained = True
                fresh = predictor.train(values[t - b:t])
                preds[t] = predictor.predict(fresh, values[t - b:t], t)
                aares[-1] = aare_at(t)
                if aares[-1] <= thd():
                    verdict = "normal"
                    model = fresh
                else:
                    verdict = "anomaly"
                    flag = False
        else:
            retrained = True
            fresh = predictor.train(values[t - b:t])
            preds[t] = predictor.predict(fresh, values[t - b:t], t)
            aares.append(aare_at(t))
            if aares[-1] <= thd():
                verdict = "normal"
                model = fresh
                flag = True
            else:
                verdict = "anomaly"
        out.append((verdict, flag, retrained))
    return out


class TablePredictor:
    """Deterministic stub whose forecast depends on the trained model.

    Forecasts come from a precomputed noise table indexed by both the
    target time point and the ordinal of the model in use, so retraining
    genuinely changes predictions without any randomness at call time.
    """

    def __init__(self, values, seed, miss_rate=0.1, noise=0.02, miss_scale=0.6):
        self._values = [float(v) for v in values]
        rng = np.random.default_rng(seed)
        n = len(values)
        table = rng.normal(0.0, noise, 4 * n)
        misses = rng.random(4 * n) < miss_rate
        table[misses] *= miss_scale / noise
        self._table = table
        self._trained = 0

    def train(self, window):
        self._trained += 1
        return self._trained

    def predict(self, model, recent, target):
        jitter = self._table[(target + 97 * model) % self._table.size]
        return self._values[target] * (1.0 + jitter)
