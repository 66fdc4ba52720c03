"""Online drift adaptation loop.

Incoming windows are grouped into fixed-size batches. Each batch is scored
by the current model and checked against the detector. On an alarm the batch
joins the data pool and the model is retrained on the whole pool. In
persistent mode the batches following an alarm also join the pool (without
retraining) until a countdown runs out.
"""

from __future__ import annotations

import csv
import enum
import hashlib
import io
import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable

import numpy as np

from .detector import DetectorState, Outcome, batch_statistic, evaluate
from .errors import ConfigError, DatasetIOError, NumericStateError
from .predictor.model import WindowSet

log = logging.getLogger(__name__)


class Mode(str, enum.Enum):
    BASELINE = "baseline"
    NON_PERSISTENT = "np"
    PERSISTENT = "p"

    @property
    def label(self) -> str:
        return {"baseline": "baseline", "np": "non_persistent", "p": "persistent"}[self.value]


@dataclass(frozen=True)
class AdaptationConfig:
    mode: Mode = Mode.PERSISTENT
    beta: int = 10
    tau: int = 25
    theta: int | None = None
    n_factor: float = 2
    seed: int = 0
    pool_seed_initial: bool = False

    def __post_init__(self):
        object.__setattr__(self, "mode", Mode(self.mode))
        if self.beta < 1 or self.tau < 1:
            raise ConfigError("beta and tau must be positive")
        if self.theta is not None and self.theta < 0:
            raise ConfigError("theta must be non-negative")
        if self.mode is not Mode.PERSISTENT and self.theta:
            raise ConfigError(f"theta={self.theta} has no meaning in {self.mode.label} mode")

    @property
    def effective_theta(self) -> int:
        if self.mode is not Mode.PERSISTENT:
            return 0
        return 5 if self.theta is None else self.theta

    def to_dict(self) -> dict:
        d = asdict(self)
        d["mode"] = self.mode.value
        d["theta"] = self.effective_theta
        return d


@dataclass(frozen=True)
class BatchEvent:
    batch_index: int
    statistic: float
    outcome: Outcome
    pooled: bool
    retrained: bool
    pool_size_after: int
    countdown_after: int = 0


@dataclass
class AdaptorState:
    model: object
    pool: list[WindowSet] = field(default_factory=list)
    post_alarm_countdown: int = 0
    batches_seen: int = 0
    alarms_raised: int = 0
    event_log: list[BatchEvent] = field(default_factory=list)

    @property
    def pool_size(self) -> int:
        return sum(len(b) for b in self.pool)


class AdaptationError(NumericStateError):
    def __init__(self, batch_index: int, cause: Exception):
        super().__init__(f"retraining failed at batch {batch_index}: {cause}")
        self.batch_index = batch_index


class Adaptor:
    """Stateful driver for one run; ``process_batch`` is one pass round the loop."""

    def __init__(self, model, detector: DetectorState, config: AdaptationConfig,
                 initial_pool: WindowSet | None = None):
        self.detector = detector
        self.config = config
        self.state = AdaptorState(model=model)
        if initial_pool is not None and len(initial_pool):
            self.state.pool.append(initial_pool)

    @property
    def model(self):
        return self.state.model

    def process_batch(self, batch: WindowSet) -> BatchEvent:
        cfg, st = self.config, self.state
        index = st.batches_seen
        statistic = batch_statistic(st.model, batch)
        outcome = evaluate(self.detector, statistic)
        st.batches_seen += 1
        pooled = retrained = False

        if cfg.mode is Mode.BASELINE:
            pass
        elif outcome is Outcome.DRIFT_ALARM:
            st.pool.append(batch)
            pooled = True
            before = st.model.copy()
            try:
                st.model.fit(WindowSet.concat(st.pool), epochs=cfg.tau, seed=cfg.seed + index)
            except NumericStateError as e:
                st.model = before
                st.alarms_raised += 1
                self._log(BatchEvent(index, statistic, outcome, True, False, st.pool_size, st.post_alarm_countdown))
                raise AdaptationError(index, e) from e
            retrained = True
            st.post_alarm_countdown = cfg.effective_theta
        elif st.post_alarm_countdown > 0:
            st.pool.append(batch)
            pooled = True
            st.post_alarm_countdown -= 1

        if outcome is Outcome.DRIFT_ALARM:
            st.alarms_raised += 1
        event = BatchEvent(index, statistic, outcome, pooled, retrained, st.pool_size, st.post_alarm_countdown)
        self._log(event)
        return event

    def _log(self, event: BatchEvent):
        self.state.event_log.append(event)
        log.debug("batch %d stat=%.6g %s pooled=%s retrained=%s pool=%d", event.batch_index, event.statistic,
                  event.outcome.value, event.pooled, event.retrained, event.pool_size_after)


def batch_stream(samples: WindowSet, beta: int) -> list[WindowSet]:
    if beta < 1:
        raise ConfigError("beta must be >= 1")
    n = len(samples) // beta
    dropped = len(samples) - n * beta
    if dropped:
        log.info("dropping trailing partial batch of %d samples", dropped)
    return [samples[k * beta:(k + 1) * beta] for k in range(n)]


@dataclass
class RunReport:
    config: AdaptationConfig
    detector: DetectorState
    events: list[BatchEvent]
    model: object
    stream_hash: str
    initial_model_hash: str | None = None

    @property
    def total_batches(self) -> int:
        return len(self.events)

    @property
    def alarms(self) -> int:
        return sum(e.outcome is Outcome.DRIFT_ALARM for e in self.events)

    def alarm_timeline(self) -> list[int]:
        return [int(e.outcome is Outcome.DRIFT_ALARM) for e in self.events]

    def to_dict(self, detector_state_ref=None, final_model_ref=None, event_log_ref=None) -> dict:
        return {
            "config": self.config.to_dict(),
            "mode": self.config.mode.label,
            "detector_state_ref": detector_state_ref,
            "threshold": self.detector.threshold,
            "stream_hash": self.stream_hash,
            "initial_model_hash": self.initial_model_hash,
            "total_batches": self.total_batches,
            "alarms": self.alarms,
            "final_model_ref": final_model_ref,
            "event_log_ref": event_log_ref,
        }


def stream_hash(samples: WindowSet) -> str:
    h = hashlib.sha256()
    h.update(np.ascontiguousarray(samples.x).tobytes())
    h.update(np.ascontiguousarray(samples.y).tobytes())
    return h.hexdigest()


def run_stream(initial_model, detector: DetectorState, config: AdaptationConfig, stream: WindowSet,
               initial_pool: WindowSet | None = None) -> RunReport:
    """Fold ``process_batch`` over the batched stream. The initial model is not modified."""
    batches = batch_stream(stream, config.beta)
    if not batches:
        raise ConfigError(f"stream of {len(stream)} samples is shorter than one batch of {config.beta}")
    pool = initial_pool if config.pool_seed_initial else None
    adaptor = Adaptor(initial_model.copy(), detector, config, pool)
    for batch in batches:
        adaptor.process_batch(batch)
    return RunReport(config, detector, adaptor.state.event_log, adaptor.model, stream_hash(stream))


EVENT_FIELDS = ("batch_index", "statistic", "outcome", "pooled", "retrained", "pool_size_after")


def events_to_csv(events: Iterable[BatchEvent]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(EVENT_FIELDS)
    for e in events:
        w.writerow((e.batch_index, repr(e.statistic), e.outcome.value, int(e.pooled), int(e.retrained),
                    e.pool_size_after))
    return buf.getvalue()


def events_from_csv(text: str) -> list[BatchEvent]:
    rows = csv.DictReader(io.StringIO(text))
    return [BatchEvent(int(r["batch_index"]), float(r["statistic"]), Outcome(r["outcome"]),
                       r["pooled"] == "1", r["retrained"] == "1", int(r["pool_size_after"])) for r in rows]


def write_events(events, path: str | Path) -> None:
    try:
        Path(path).write_text(events_to_csv(events))
    except OSError as e:
        raise DatasetIOError(f"cannot write event log {path}: {e}") from e


def write_report(report: RunReport, path: str | Path, **refs) -> None:
    Path(path).write_text(json.dumps(report.to_dict(**refs), indent=2) + "\n")
