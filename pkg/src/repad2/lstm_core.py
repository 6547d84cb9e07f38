"""Minimal deterministic LSTM for one-step-ahead forecasting.

One hidden layer, scalar input, scalar output. A model is trained on a
short window of consecutive observations (three by default) as a
teacher-forced next-step task: inputs are the window values except the
last, targets are the window values except the first. Prediction feeds
the most recent window through the cell from a zero state and reads the
output of the last step.

Everything is plain float64 numpy with a fixed operation order, so the
whole pipeline (seeded init -> SGD training -> prediction) is a pure,
bit-reproducible function of (window, config).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ConfigError, DataFormatError, TrainingDivergedError

_MASK64 = (1 << 64) - 1


class _SplitMix64:
    """Tiny splitmix64 generator used only for weight initialization."""

    def __init__(self, seed: int):
        self._state = seed & _MASK64

    def next_u64(self) -> int:
        self._state = (self._state + 0x9E3779B97F4A7C15) & _MASK64
        z = self._state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return z ^ (z >> 31)

    def uniform(self, low: float, high: float, n: int) -> np.ndarray:
        # 53-bit mantissa draw, uniform in [0, 1)
        u = np.array([(self.next_u64() >> 11) * 2.0**-53 for _ in range(n)])
        return low + (high - low) * u


@dataclass(frozen=True)
class LstmConfig:
    hidden_units: int = 10
    max_epochs: int = 50
    learning_rate: float = 0.005
    seed: int = 140
    early_stop_patience: int = 3
    early_stop_min_delta: float = 0.0

    def __post_init__(self) -> None:
        if self.hidden_units < 1:
            raise ConfigError(f"hidden_units must be >= 1, got {self.hidden_units}")
        if self.max_epochs < 1:
            raise ConfigError(f"max_epochs must be >= 1, got {self.max_epochs}")
        if self.learning_rate <= 0:
            raise ConfigError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.early_stop_patience < 1:
            raise ConfigError(f"early_stop_patience must be >= 1, got {self.early_stop_patience}")


@dataclass(frozen=True)
class Normalizer:
    """Affine map of the training window onto [-1, 1].

    Degenerate (constant) windows use half_range = max(|center|, 1) so
    every window value normalizes to exactly 0.
    """

    center: float
    half_range: float

    def normalize(self, v: float) -> float:
        return (v - self.center) / self.half_range

    def normalize_many(self, values: Sequence[float]) -> np.ndarray:
        return (np.asarray(values, dtype=np.float64) - self.center) / self.half_range

    def denormalize(self, y: float) -> float:
        return y * self.half_range + self.center


@dataclass
class LstmModel:
    """Trained parameters plus the window normalizer they were fit with.

    Gate blocks are packed in the order input, forget, cell, output: row
    block ``k*h:(k+1)*h`` of ``w_x``/``w_h``/``b`` belongs to gate k.
    Arrays are frozen after training; treat instances as immutable.
    """

    hidden_units: int
    w_x: np.ndarray  # (4h,) input weights
    w_h: np.ndarray  # (4h, h) recurrent weights
    b: np.ndarray    # (4h,) gate biases
    w_out: np.ndarray  # (h,) output projection
    b_out: float
    scaler: Normalizer

    def __post_init__(self) -> None:
        for arr in (self.w_x, self.w_h, self.b, self.w_out):
            arr.flags.writeable = False


def _check_window(values: Sequence[float], min_len: int = 2) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 1 or arr.size < min_len:
        raise DataFormatError(f"window must hold at least {min_len} values, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DataFormatError("window contains non-finite values")
    return arr


def fit_normalizer(window: Sequence[float]) -> Normalizer:
    arr = _check_window(window, min_len=1)
    lo, hi = float(arr.min()), float(arr.max())
    center = (lo + hi) / 2.0
    half_range = (hi - lo) / 2.0
    if half_range == 0.0:
        half_range = max(abs(center), 1.0)
    return Normalizer(center=center, half_range=half_range)


def _sigmoid(x: np.ndarray) -> np.ndarray:
    # 0.5*(1+tanh(x/2)) is exact and never overflows
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def _init_params(config: LstmConfig) -> list[np.ndarray]:
    """Seeded Glorot-uniform init, biases zero except forget gate at 1.

    Draw order (fixed, part of the determinism contract): per-gate input
    weights, per-gate recurrent weights row-major, output weights. Gates
    in i, f, g, o order throughout.
    """
    h = config.hidden_units
    rng = _SplitMix64(config.seed)
    r_x = math.sqrt(6.0 / (1 + h))
    r_h = math.sqrt(6.0 / (h + h))
    r_out = math.sqrt(6.0 / (h + 1))
    w_x = np.concatenate([rng.uniform(-r_x, r_x, h) for _ in range(4)])
    w_h = np.vstack([rng.uniform(-r_h, r_h, h * h).reshape(h, h) for _ in range(4)])
    b = np.zeros(4 * h)
    b[h:2 * h] = 1.0  # forget-gate bias
    w_out = rng.uniform(-r_out, r_out, h)
    b_out = np.zeros(1)
    return [w_x, w_h, b, w_out, b_out]


def _forward(params: Sequence[np.ndarray], xs: np.ndarray) -> tuple[np.ndarray, list]:
    """Run the cell over scalar inputs ``xs`` from a zero state.

    Returns per-step outputs and the cache needed for backprop.
    """
    w_x, w_h, b, w_out, b_out = params
    h = w_out.size
    h_prev = np.zeros(h)
    c_prev = np.zeros(h)
    ys = np.empty(xs.size)
    cache = []
    for t, x in enumerate(xs):
        a = w_x * x + w_h @ h_prev + b
        i = _sigmoid(a[:h])
        f = _sigmoid(a[h:2 * h])
        g = np.tanh(a[2 * h:3 * h])
        o = _sigmoid(a[3 * h:])
        c = f * c_prev + i * g
        hc = np.tanh(c)
        h_t = o * hc
        ys[t] = w_out @ h_t + b_out[0]
        cache.append((x, h_prev, c_prev, i, f, g, o, hc, h_t))
        h_prev, c_prev = h_t, c
    return ys, cache


def _loss_and_grads(
    params: Sequence[np.ndarray], xs: np.ndarray, targets: np.ndarray
) -> tuple[float, list[np.ndarray]]:
    """MSE over the teacher-forced steps and its full BPTT gradient."""
    w_x, w_h, b, w_out, b_out = params
    h = w_out.size
    steps = xs.size
    ys, cache = _forward(params, xs)
    err = ys - targets
    loss = float(err @ err) / steps

    d_wx = np.zeros_like(w_x)
    d_wh = np.zeros_like(w_h)
    d_b = np.zeros_like(b)
    d_wout = np.zeros_like(w_out)
    d_bout = 0.0
    dh_next = np.zeros(h)
    dc_next = np.zeros(h)
    for t in range(steps - 1, -1, -1):
        x, h_prev, c_prev, i, f, g, o, hc, h_t = cache[t]
        dy = 2.0 * err[t] / steps
        d_wout += dy * h_t
        d_bout += dy
        dh = dh_next + dy * w_out
        do = dh * hc
        dc = dc_next + dh * o * (1.0 - hc * hc)
        di = dc * g
        dg = dc * i
        df = dc * c_prev
        dc_next = dc * f
        da = np.concatenate([
            di * i * (1.0 - i),
            df * f * (1.0 - f),
            dg * (1.0 - g * g),
            do * o * (1.0 - o),
        ])
        d_wx += da * x
        d_wh += np.outer(da, h_prev)
        d_b += da
        dh_next = w_h.T @ da
    return loss, [d_wx, d_wh, d_b, d_wout, np.array([d_bout])]


def _run_training(
    window: np.ndarray, config: LstmConfig
) -> tuple[list[np.ndarray], Normalizer, list[float]]:
    """SGD with early stopping; returns the best-loss parameters seen.

    An epoch counts as improving when its loss beats the best so far by
    more than min_delta; ``patience`` consecutive non-improving epochs
    stop training.
    """
    scaler = fit_normalizer(window)
    normalized = scaler.normalize_many(window)
    xs, targets = normalized[:-1], normalized[1:]
    params = _init_params(config)
    best = [p.copy() for p in params]
    best_loss = math.inf
    bad_epochs = 0
    history: list[float] = []
    for _epoch in range(config.max_epochs):
        loss, grads = _loss_and_grads(params, xs, targets)
        if not math.isfinite(loss):
            raise TrainingDivergedError(
                f"non-finite training loss at epoch {_epoch} (window={window.tolist()})"
            )
        history.append(loss)
        if loss < best_loss - config.early_stop_min_delta:
            best_loss = loss
            best = [p.copy() for p in params]
            bad_epochs = 0
        else:
            bad_epochs += 1
            if bad_epochs >= config.early_stop_patience:
                break
        for p, grad in zip(params, grads):
            p -= config.learning_rate * grad
    return best, scaler, history


def train(window: Sequence[float], config: LstmConfig = LstmConfig()) -> LstmModel:
    """Train a fresh model on one window of consecutive observations."""
    arr = _check_window(window)
    params, scaler, _ = _run_training(arr, config)
    w_x, w_h, b, w_out, b_out = params
    return LstmModel(
        hidden_units=config.hidden_units,
        w_x=w_x, w_h=w_h, b=b, w_out=w_out, b_out=float(b_out[0]),
        scaler=scaler,
    )


def init_model(window: Sequence[float], config: LstmConfig = LstmConfig()) -> LstmModel:
    """Untrained model (seeded init only), normalizer fit to ``window``."""
    _check_window(window, min_len=1)
    w_x, w_h, b, w_out, b_out = _init_params(config)
    return LstmModel(
        hidden_units=config.hidden_units,
        w_x=w_x, w_h=w_h, b=b, w_out=w_out, b_out=float(b_out[0]),
        scaler=fit_normalizer(window),
    )


def predict_next(model: LstmModel, recent: Sequence[float]) -> float:
    """One-step-ahead forecast from the most recent observed values.

    Pure: feeds the normalized sequence through the cell from a zero
    state and denormalizes the last step's output.
    """
    arr = _check_window(recent, min_len=1)
    xs = model.scaler.normalize_many(arr)
    ys, _ = _forward(_model_params(model), xs)
    return model.scaler.denormalize(float(ys[-1]))


def training_loss(model: LstmModel, window: Sequence[float]) -> float:
    """MSE of the teacher-forced next-step task in normalized space."""
    arr = _check_window(window)
    xs = model.scaler.normalize_many(arr)
    ys, _ = _forward(_model_params(model), xs[:-1])
    err = ys - xs[1:]
    return float(err @ err) / err.size


def _model_params(model: LstmModel) -> list[np.ndarray]:
    return [model.w_x, model.w_h, model.b, model.w_out, np.array([model.b_out])]


def get_parameters(model: LstmModel) -> np.ndarray:
    """Flat copy of all parameters: w_x, w_h row-major, b, w_out, b_out."""
    return np.concatenate([p.ravel() for p in _model_params(model)])


def with_parameters(model: LstmModel, flat: np.ndarray) -> LstmModel:
    """New model with the same topology/scaler and the given flat parameters."""
    h = model.hidden_units
    sizes = [4 * h, 4 * h * h, 4 * h, h, 1]
    if flat.size != sum(sizes):
        raise ConfigError(f"expected {sum(sizes)} parameters, got {flat.size}")
    parts = np.split(np.array(flat, dtype=np.float64), np.cumsum(sizes)[:-1])
    return LstmModel(
        hidden_units=h,
        w_x=parts[0],
        w_h=parts[1].reshape(4 * h, h),
        b=parts[2],
        w_out=parts[3],
        b_out=float(parts[4][0]),
        scaler=model.scaler,
    )


def loss_and_gradients(model: LstmModel, window: Sequence[float]) -> tuple[float, np.ndarray]:
    """Training loss on ``window`` and its gradient, flat, in get_parameters order."""
    arr = _check_window(window)
    xs = model.scaler.normalize_many(arr)
    loss, grads = _loss_and_grads(_model_params(model), xs[:-1], xs[1:])
    return loss, np.concatenate([g.ravel() for g in grads])


def dump_parameters(model: LstmModel) -> str:
    """Flat text dump for golden-file determinism checks.

    Line 1: hidden unit count. Lines 2-3: normalizer center and half
    range. Then one parameter per line in get_parameters order (gate
    blocks i, f, g, o).
    """
    lines = [
        f"hidden_units {model.hidden_units}",
        f"center {model.scaler.center!r}",
        f"half_range {model.scaler.half_range!r}",
    ]
    lines.extend(repr(float(v)) for v in get_parameters(model))
    return "\n".join(lines) + "\n"
