"""Model objects the detector and adaptor drive.

Both regressors expose the same surface: ``predict(X)``, ``fit(samples,
epochs, seed)`` (warm start), ``copy()``, and checkpoint round-trip via
``to_checkpoint()`` / ``load_checkpoint()``.
"""

from __future__ import annotations

import dataclasses
import json
from pathlib import Path

import numpy as np

from ..errors import DatasetIOError, InvalidArgumentError, NumericStateError, SchemaError
from .model import Architecture, ModelParams, Normalizer, WindowSet, init_params, predict
from .optim import AdamState, TrainConfig
from .train import train

CHECKPOINT_FORMAT = "coredrift-checkpoint"
CHECKPOINT_VERSION = 1


class LSTMRegressor:
    kind = "lstm"

    def __init__(self, arch: Architecture = Architecture(), config: TrainConfig = TrainConfig(),
                 normalizer: Normalizer = Normalizer(), params: ModelParams | None = None,
                 opt_state: AdamState | None = None, init_seed: int | None = None):
        self.arch = arch
        self.config = config
        self.normalizer = normalizer
        self.params = params if params is not None else init_params(arch, config.seed if init_seed is None else init_seed)
        self.opt_state = opt_state
        self.history: list[float] = []

    @property
    def window(self) -> int:
        return self.arch.window

    def predict(self, X) -> np.ndarray:
        return predict(self.params, X)

    def fit(self, samples: WindowSet, epochs: int | None = None, seed: int | None = None,
            reset_optimizer: bool = True) -> list[float]:
        """Continue training from the current weights; returns the epoch losses."""
        cfg = dataclasses.replace(self.config,
                                  epochs=self.config.epochs if epochs is None else epochs,
                                  seed=self.config.seed if seed is None else seed)
        result = train(self.params, samples, cfg, None if reset_optimizer else self.opt_state)
        self.params, self.opt_state = result.params, result.opt_state
        self.history.extend(result.history)
        return result.history

    def copy(self) -> "LSTMRegressor":
        m = LSTMRegressor(self.arch, self.config, self.normalizer, self.params.copy(),
                          None if self.opt_state is None else self.opt_state.copy())
        m.history = list(self.history)
        return m

    def to_checkpoint(self) -> dict:
        opt = None
        if self.opt_state is not None:
            opt = {"t": self.opt_state.t, "m": self.opt_state.m.tolist(), "v": self.opt_state.v.tolist()}
        return {
            "format": CHECKPOINT_FORMAT,
            "version": CHECKPOINT_VERSION,
            "kind": self.kind,
            "architecture": {"window": self.arch.window, "hidden": self.arch.hidden, "dense": list(self.arch.dense)},
            "shapes": {name: list(shape) for name, shape in self.arch.shapes()},
            "normalizer_scale": self.normalizer.scale_bytes,
            "train_config": self.config.to_dict(),
            "params": self.params.flat.tolist(),
            "optimizer": opt,
            "history": list(self.history),
        }

    @classmethod
    def from_checkpoint(cls, d: dict) -> "LSTMRegressor":
        arch = Architecture(**d["architecture"])
        expected = {name: list(shape) for name, shape in arch.shapes()}
        if d.get("shapes", expected) != expected:
            raise SchemaError("checkpoint shapes do not match its architecture")
        opt = d.get("optimizer")
        state = None if opt is None else AdamState(np.array(opt["m"], dtype=np.float64),
                                                   np.array(opt["v"], dtype=np.float64), int(opt["t"]))
        m = cls(arch, TrainConfig(**d["train_config"]), Normalizer(d["normalizer_scale"]),
                ModelParams(arch, np.array(d["params"], dtype=np.float64)), state)
        m.history = list(d.get("history", []))
        return m


class LinearAutoregressor:
    """Least-squares linear predictor over the window; a fast stand-in for tests.

    ``fit`` solves the least-squares problem on the given samples exactly, so
    ``epochs`` only has to be positive to trigger a refit.
    """

    kind = "linear"

    def __init__(self, window: int = 10, normalizer: Normalizer = Normalizer(), coef=None):
        self.arch = Architecture(window=window, hidden=1, dense=())
        self.normalizer = normalizer
        self.coef = np.zeros(window + 1) if coef is None else np.asarray(coef, dtype=np.float64)
        self.history: list[float] = []

    @property
    def window(self) -> int:
        return self.arch.window

    def predict(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if not np.isfinite(self.coef).all():
            raise NumericStateError("linear coefficients contain NaN or Inf")
        return X @ self.coef[:-1] + self.coef[-1]

    def fit(self, samples: WindowSet, epochs: int | None = 1, seed: int | None = None,
            reset_optimizer: bool = True) -> list[float]:
        if len(samples) < 1:
            raise InvalidArgumentError("fit needs at least one sample")
        if epochs == 0:
            return []
        A = np.hstack([samples.x, np.ones((len(samples), 1))])
        self.coef = np.linalg.lstsq(A, samples.y, rcond=None)[0]
        r = self.predict(samples.x) - samples.y
        loss = float(np.mean(r * r))
        self.history.append(loss)
        return [loss]

    def copy(self) -> "LinearAutoregressor":
        m = LinearAutoregressor(self.window, self.normalizer, self.coef.copy())
        m.history = list(self.history)
        return m

    def to_checkpoint(self) -> dict:
        return {
            "format": CHECKPOINT_FORMAT,
            "version": CHECKPOINT_VERSION,
            "kind": self.kind,
            "architecture": {"window": self.window},
            "normalizer_scale": self.normalizer.scale_bytes,
            "params": self.coef.tolist(),
            "history": list(self.history),
        }

    @classmethod
    def from_checkpoint(cls, d: dict) -> "LinearAutoregressor":
        m = cls(d["architecture"]["window"], Normalizer(d["normalizer_scale"]), d["params"])
        m.history = list(d.get("history", []))
        return m


_KINDS = {cls.kind: cls for cls in (LSTMRegressor, LinearAutoregressor)}


def save_checkpoint(model, path: str | Path) -> None:
    try:
        Path(path).write_text(json.dumps(model.to_checkpoint()) + "\n")
    except OSError as e:
        raise DatasetIOError(f"cannot write checkpoint {path}: {e}") from e


def load_checkpoint(path: str | Path):
    try:
        d = json.loads(Path(path).read_text())
    except OSError as e:
        raise DatasetIOError(f"cannot read checkpoint {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise SchemaError(f"checkpoint {path} is not valid JSON: {e}") from e
    if d.get("format") != CHECKPOINT_FORMAT or d.get("version") != CHECKPOINT_VERSION:
        raise SchemaError(f"{path} is not a version-{CHECKPOINT_VERSION} checkpoint")
    try:
        return _KINDS[d["kind"]].from_checkpoint(d)
    except KeyError as e:
        raise SchemaError(f"checkpoint {path} is missing {e}") from e
