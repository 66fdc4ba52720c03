"""Squared-error threshold detector.

Calibration pools the per-sample squared errors of the model on same-concept
data and sets the alarm threshold at ``mean + n * std`` (population std).
A batch alarms when its mean squared error lies strictly above the threshold.
"""

from __future__ import annotations

import enum
import json
import logging
import math
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import CalibrationError, DatasetIOError, InvalidArgumentError, NumericStateError, SchemaError
from .predictor.model import WindowSet, make_windows

log = logging.getLogger(__name__)


class Outcome(str, enum.Enum):
    IN_THRESHOLD = "InThreshold"
    DRIFT_ALARM = "DriftAlarm"


@dataclass(frozen=True)
class DetectorState:
    mu: float
    sigma: float
    n_factor: float
    calibration_sample_count: int
    model_checkpoint_ref: str | None = None

    @property
    def threshold(self) -> float:
        return self.mu + self.n_factor * self.sigma

    def with_n(self, n_factor: float) -> "DetectorState":
        _check_n(n_factor)
        return DetectorState(self.mu, self.sigma, n_factor, self.calibration_sample_count, self.model_checkpoint_ref)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["threshold"] = self.threshold
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "DetectorState":
        try:
            state = cls(float(d["mu"]), float(d["sigma"]), d["n"] if "n" in d else d["n_factor"],
                        int(d["calibration_sample_count"]), d.get("model_checkpoint_ref"))
        except KeyError as e:
            raise SchemaError(f"detector state missing {e}") from e
        if "threshold" in d and d["threshold"] != state.threshold:
            raise SchemaError("stored threshold disagrees with mu + n * sigma")
        return state

    def save(self, path: str | Path) -> None:
        d = self.to_dict()
        d["n"] = d.pop("n_factor")
        try:
            Path(path).write_text(json.dumps(d, indent=2) + "\n")
        except OSError as e:
            raise DatasetIOError(f"cannot write detector state {path}: {e}") from e

    @classmethod
    def load(cls, path: str | Path) -> "DetectorState":
        try:
            return cls.from_dict(json.loads(Path(path).read_text()))
        except OSError as e:
            raise DatasetIOError(f"cannot read detector state {path}: {e}") from e


def _check_n(n_factor):
    if not n_factor > 0:
        raise InvalidArgumentError(f"n_factor must be positive, got {n_factor}")
    if n_factor != int(n_factor):
        log.warning("n_factor=%s is not an integer; the threshold is normally mean + n*std with integer n", n_factor)


def threshold_from_errors(squared_errors, n_factor: float = 2, model_checkpoint_ref: str | None = None) -> DetectorState:
    """Detector state from an explicit set of per-sample squared errors."""
    _check_n(n_factor)
    e = np.asarray(squared_errors, dtype=np.float64).ravel()
    if e.size < 2:
        raise CalibrationError(f"calibration needs at least 2 samples, got {e.size}")
    if not np.isfinite(e).all():
        raise NumericStateError("calibration errors contain NaN or Inf")
    return DetectorState(float(np.mean(e)), float(np.std(e)), n_factor, int(e.size), model_checkpoint_ref)


def squared_errors(model, samples: WindowSet) -> np.ndarray:
    r = model.predict(samples.x) - samples.y
    return r * r


def calibrate(model, concept_streams: Sequence[Sequence[int]], n_factor: float = 2,
              model_checkpoint_ref: str | None = None) -> DetectorState:
    """Threshold from the model's errors on every window of every stream, pooled."""
    windows = WindowSet.concat(
        [make_windows(s, model.window, model.normalizer) for s in concept_streams], model.window)
    if len(windows) < 2:
        raise CalibrationError(f"calibration streams yield {len(windows)} windows, need at least 2")
    return threshold_from_errors(squared_errors(model, windows), n_factor, model_checkpoint_ref)


def batch_statistic(model, batch: WindowSet) -> float:
    if len(batch) == 0:
        raise InvalidArgumentError("batch must be non-empty")
    return float(np.mean(squared_errors(model, batch)))


def evaluate(state: DetectorState, statistic: float) -> Outcome:
    if math.isnan(statistic):
        raise NumericStateError("batch statistic is NaN")
    return Outcome.DRIFT_ALARM if statistic > state.threshold else Outcome.IN_THRESHOLD
