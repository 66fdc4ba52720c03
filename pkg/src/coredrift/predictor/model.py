"""LSTM + ReLU dense regressor of the next packet length.

Parameters live in one flat float64 vector so the optimizer, checkpointing
and finiteness checks treat the whole model uniformly; named views expose the
individual weight matrices.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Iterator, NamedTuple, Sequence

import numpy as np

from ..errors import InvalidArgumentError, NumericStateError
from . import kernels

log = logging.getLogger(__name__)

_PREDICT_CHUNK = 2048


@dataclass(frozen=True)
class Architecture:
    window: int = 10
    hidden: int = 100
    dense: tuple[int, ...] = (75, 50, 25)

    def __post_init__(self):
        object.__setattr__(self, "dense", tuple(int(d) for d in self.dense))
        if self.window < 1 or self.hidden < 1 or any(d < 1 for d in self.dense):
            raise InvalidArgumentError(f"invalid architecture {self}")

    def shapes(self) -> list[tuple[str, tuple[int, ...]]]:
        H = self.hidden
        out = [("lstm_W", (4 * H, 1 + H)), ("lstm_b", (4 * H,))]
        fan_in = H
        for k, width in enumerate(self.dense):
            out += [(f"dense{k}_W", (width, fan_in)), (f"dense{k}_b", (width,))]
            fan_in = width
        out += [("head_W", (1, fan_in)), ("head_b", (1,))]
        return out

    @property
    def size(self) -> int:
        return sum(int(np.prod(s)) for _, s in self.shapes())


class ModelParams:
    """All predictor weights as one flat vector with named reshaped views."""

    def __init__(self, arch: Architecture, flat: np.ndarray | None = None):
        self.arch = arch
        if flat is None:
            flat = np.zeros(arch.size)
        flat = np.ascontiguousarray(flat, dtype=np.float64)
        if flat.shape != (arch.size,):
            raise InvalidArgumentError(f"expected {arch.size} parameters, got {flat.shape}")
        self.flat = flat
        self._views = {}
        offset = 0
        for name, shape in arch.shapes():
            n = int(np.prod(shape))
            self._views[name] = flat[offset:offset + n].reshape(shape)
            offset += n

    def __getitem__(self, name: str) -> np.ndarray:
        return self._views[name]

    def names(self) -> list[str]:
        return list(self._views)

    def copy(self) -> "ModelParams":
        return ModelParams(self.arch, self.flat.copy())

    def is_finite(self) -> bool:
        return bool(np.isfinite(self.flat).all())

    def dense_layers(self) -> Iterator[tuple[np.ndarray, np.ndarray]]:
        for k in range(len(self.arch.dense)):
            yield self[f"dense{k}_W"], self[f"dense{k}_b"]

    def __eq__(self, other):
        return (isinstance(other, ModelParams) and self.arch == other.arch
                and np.array_equal(self.flat, other.flat))

    def __repr__(self):
        return f"ModelParams({self.arch}, size={self.arch.size})"


def init_params(arch: Architecture, seed: int = 0) -> ModelParams:
    """Uniform(+-1/sqrt(fan_in)) weights and biases; forget-gate bias set to 1."""
    rng = np.random.default_rng(seed)
    p = ModelParams(arch)
    H = arch.hidden
    for name, shape in arch.shapes():
        if name.startswith("lstm"):
            fan_in = 1 + H
        elif name.endswith("_W"):
            fan_in = shape[1]
        else:
            fan_in = p[name.replace("_b", "_W")].shape[1]
        bound = 1.0 / np.sqrt(fan_in)
        p[name][...] = rng.uniform(-bound, bound, size=shape)
    p["lstm_b"][H:2 * H] = 1.0
    return p


@dataclass(frozen=True)
class Normalizer:
    scale_bytes: float = 1400.0

    def __post_init__(self):
        if not self.scale_bytes > 0:
            raise InvalidArgumentError("scale_bytes must be positive")

    def normalize(self, v):
        return np.asarray(v, dtype=np.float64) / self.scale_bytes

    def denormalize(self, v):
        return np.asarray(v, dtype=np.float64) * self.scale_bytes


class WindowSample(NamedTuple):
    x: np.ndarray
    y: float


@dataclass
class WindowSet(Sequence[WindowSample]):
    """Stacked window samples: ``x`` is (N, window), ``y`` is (N,).

    ``t`` optionally holds the timestamp of each target packet and ``source``
    the UE it came from; both ride along through slicing and concatenation.
    """

    x: np.ndarray
    y: np.ndarray
    t: np.ndarray | None = None
    source: np.ndarray | None = field(default=None)

    def __len__(self):
        return len(self.y)

    def __getitem__(self, i):
        if isinstance(i, (int, np.integer)):
            return WindowSample(self.x[i], float(self.y[i]))
        return WindowSet(self.x[i], self.y[i],
                         None if self.t is None else self.t[i],
                         None if self.source is None else self.source[i])

    @classmethod
    def empty(cls, window: int) -> "WindowSet":
        return cls(np.zeros((0, window)), np.zeros(0))

    @classmethod
    def concat(cls, parts: Sequence["WindowSet"], window: int | None = None) -> "WindowSet":
        parts = [p for p in parts if len(p)]
        if not parts:
            return cls.empty(window or 0)
        t = None if any(p.t is None for p in parts) else np.concatenate([p.t for p in parts])
        src = None if any(p.source is None for p in parts) else np.concatenate([p.source for p in parts])
        return cls(np.concatenate([p.x for p in parts]), np.concatenate([p.y for p in parts]), t, src)


def make_windows(lengths, window: int = 10, normalizer: Normalizer = Normalizer(),
                 timestamps=None, source=None) -> WindowSet:
    """Slide a ``window``-long context over ``lengths``; each window's target is the next value."""
    if window < 1:
        raise InvalidArgumentError("window must be >= 1")
    v = normalizer.normalize(np.asarray(lengths, dtype=np.float64))
    n = len(v) - window
    if n < 1:
        log.warning("stream of %d lengths too short for window %d", len(v), window)
        return WindowSet.empty(window)
    x = np.lib.stride_tricks.sliding_window_view(v, window)[:n].copy()
    t = None if timestamps is None else np.asarray(timestamps)[window:].copy()
    src = None if source is None else np.full(n, source, dtype=object)
    return WindowSet(x, v[window:].copy(), t, src)


def mse_loss(predictions, targets) -> float:
    p = np.asarray(predictions, dtype=np.float64)
    t = np.asarray(targets, dtype=np.float64)
    if p.shape != t.shape or p.size == 0:
        raise InvalidArgumentError("predictions and targets must be non-empty and equally shaped")
    d = p - t
    return float(np.mean(d * d))


class _Cache(NamedTuple):
    X: np.ndarray
    hs: np.ndarray
    cs: np.ndarray
    gates: np.ndarray
    acts: list  # input to each dense layer then head: [h_T, a0, a1, ...]


def _check_finite(params: ModelParams):
    if not params.is_finite():
        raise NumericStateError("model parameters contain NaN or Inf")


def _forward_batch(params: ModelParams, X: np.ndarray):
    X = np.ascontiguousarray(X, dtype=np.float64)
    hs, cs, gates = kernels.lstm_forward(params["lstm_W"], params["lstm_b"], X)
    a = hs[-1]
    acts = [a]
    for W, b in params.dense_layers():
        a = np.maximum(a @ W.T + b, 0.0)
        acts.append(a)
    y = a @ params["head_W"][0] + params["head_b"][0]
    return y, _Cache(X, hs, cs, gates, acts)


def forward(params: ModelParams, x) -> tuple[float, _Cache]:
    """Prediction for one window, plus the activations needed for backprop."""
    _check_finite(params)
    y, cache = _forward_batch(params, np.asarray(x, dtype=np.float64)[None, :])
    return float(y[0]), cache


def predict(params: ModelParams, X) -> np.ndarray:
    """Predictions for a stack of windows (N x window)."""
    _check_finite(params)
    X = np.asarray(X, dtype=np.float64)
    if len(X) == 0:
        return np.zeros(0)
    return np.concatenate([_forward_batch(params, X[i:i + _PREDICT_CHUNK])[0]
                           for i in range(0, len(X), _PREDICT_CHUNK)])


def backward(params: ModelParams, X, y) -> tuple[float, ModelParams]:
    """Minibatch MSE and its exact gradient with respect to every parameter."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if len(X) == 0:
        raise InvalidArgumentError("backward needs a non-empty minibatch")
    with np.errstate(over="raise", invalid="raise"):
        try:
            pred, cache = _forward_batch(params, X)
            resid = pred - y
            loss = float(np.mean(resid * resid))
            grads = _backprop(params, cache, 2.0 * resid / len(y))
        except FloatingPointError as e:
            raise NumericStateError(f"overflow during backpropagation: {e}") from e
    if not (np.isfinite(loss) and grads.is_finite()):
        raise NumericStateError("non-finite loss or gradient")
    return loss, grads


def _backprop(params: ModelParams, cache: _Cache, dy: np.ndarray) -> ModelParams:
    g = ModelParams(params.arch)
    acts = cache.acts
    g["head_W"][0] = dy @ acts[-1]
    g["head_b"][0] = dy.sum()
    da = np.outer(dy, params["head_W"][0])
    for k in range(len(params.arch.dense) - 1, -1, -1):
        dz = da * (acts[k + 1] > 0.0)
        g[f"dense{k}_W"][...] = dz.T @ acts[k]
        g[f"dense{k}_b"][...] = dz.sum(axis=0)
        da = dz @ params[f"dense{k}_W"]
    dW, db = kernels.lstm_backward(params["lstm_W"], cache.X, cache.hs, cache.cs, cache.gates,
                                   np.ascontiguousarray(da))
    g["lstm_W"][...] = dW
    g["lstm_b"][...] = db
    return g
