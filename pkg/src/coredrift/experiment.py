"""Experiment configuration, model profiles and stream extraction.

The CLI stages are thin wrappers over these functions; tests and the
acceptance suite call them directly.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

import numpy as np

from .adaptor import AdaptationConfig, Mode, RunReport, run_stream
from .detector import DetectorState, calibrate
from .emulator import Dataset, EmulationTimeline, emulate_experiment, load_dataset
from .errors import ConfigError
from .predictor.model import Architecture, Normalizer, WindowSet, make_windows
from .predictor.optim import TrainConfig
from .predictor.regressors import LinearAutoregressor, LSTMRegressor


@dataclass(frozen=True)
class ModelProfile:
    name: str
    arch: Architecture
    epochs: int
    tau: int


PROFILES = {
    "paper": ModelProfile("paper", Architecture(10, 100, (75, 50, 25)), epochs=200, tau=25),
    "ci": ModelProfile("ci", Architecture(10, 16, (75, 50, 25)), epochs=50, tau=10),
}


@dataclass(frozen=True)
class ExperimentConfig:
    timeline: EmulationTimeline | None = field(default_factory=EmulationTimeline)
    dataset_path: str | None = None
    column_map: Mapping[str, str] | None = None
    profile: str = "ci"
    train: TrainConfig | None = None
    n_factor: float = 2
    beta: int = 10
    tau: int | None = None
    theta: int = 5
    target_concept: int = 2
    train_concept: int = 1
    train_ue: str | None = None
    drift_onset_ms: int | None = None
    max_batches: int | None = 60
    pool_seed_initial: bool = False
    predictor: str = "lstm"
    seed: int = 0

    def __post_init__(self):
        if self.profile not in PROFILES:
            raise ConfigError(f"unknown profile {self.profile!r}; choose from {sorted(PROFILES)}")
        if self.timeline is None and self.dataset_path is None:
            raise ConfigError("config needs either a timeline or a dataset_path")
        if self.predictor not in ("lstm", "linear"):
            raise ConfigError(f"unknown predictor {self.predictor!r}")

    @property
    def model_profile(self) -> ModelProfile:
        return PROFILES[self.profile]

    @property
    def train_config(self) -> TrainConfig:
        if self.train is not None:
            return self.train
        return TrainConfig(epochs=self.model_profile.epochs, seed=self.seed)

    def adaptation(self, mode: Mode | str) -> AdaptationConfig:
        mode = Mode(mode)
        return AdaptationConfig(
            mode=mode, beta=self.beta,
            tau=self.model_profile.tau if self.tau is None else self.tau,
            theta=self.theta if mode is Mode.PERSISTENT else None,
            n_factor=self.n_factor, seed=self.seed, pool_seed_initial=self.pool_seed_initial,
        )

    def onset_ms(self, concept: int | None = None) -> int | None:
        """Start of the drift: activation of the first concept after the training one."""
        if self.drift_onset_ms is not None:
            return self.drift_onset_ms
        if self.timeline is None:
            return None
        later = sorted(p.activation_time_ms for p in self.timeline.profiles
                       if p.concept_id != self.train_concept)
        return later[0] if later else None

    def with_seed(self, seed: int) -> "ExperimentConfig":
        tl = None if self.timeline is None else dataclasses.replace(self.timeline, seed=seed)
        train = None if self.train is None else dataclasses.replace(self.train, seed=seed)
        return dataclasses.replace(self, seed=seed, timeline=tl, train=train)

    def to_dict(self) -> dict:
        return {
            "timeline": None if self.timeline is None else self.timeline.to_dict(),
            "dataset_path": self.dataset_path,
            "column_map": None if self.column_map is None else dict(self.column_map),
            "profile": self.profile,
            "train": self.train_config.to_dict(),
            "n_factor": self.n_factor,
            "beta": self.beta,
            "tau": self.adaptation(Mode.PERSISTENT).tau,
            "theta": self.theta,
            "target_concept": self.target_concept,
            "train_concept": self.train_concept,
            "train_ue": self.train_ue,
            "drift_onset_ms": self.drift_onset_ms,
            "max_batches": self.max_batches,
            "pool_seed_initial": self.pool_seed_initial,
            "predictor": self.predictor,
            "seed": self.seed,
        }

    def digest(self) -> str:
        return hashlib.sha256(json.dumps(self.to_dict(), sort_keys=True).encode()).hexdigest()

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "ExperimentConfig":
        d = dict(d)
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        if d.get("timeline") is not None:
            d["timeline"] = EmulationTimeline.from_dict(d["timeline"])
        elif "timeline" not in d and d.get("dataset_path") is None:
            d["timeline"] = EmulationTimeline(seed=int(d.get("seed", 0)))
        if d.get("train") is not None:
            d["train"] = TrainConfig(**d["train"])
        try:
            return cls(**d)
        except TypeError as e:
            raise ConfigError(str(e)) from e

    @classmethod
    def load(cls, path: str | Path) -> "ExperimentConfig":
        try:
            return cls.from_dict(json.loads(Path(path).read_text()))
        except json.JSONDecodeError as e:
            raise ConfigError(f"config {path} is not valid JSON: {e}") from e


def build_dataset(config: ExperimentConfig) -> Dataset:
    if config.dataset_path is not None:
        return load_dataset(config.dataset_path, config.column_map)
    return emulate_experiment(config.timeline)


def new_model(config: ExperimentConfig):
    normalizer = Normalizer()
    prof = config.model_profile
    if config.predictor == "linear":
        return LinearAutoregressor(prof.arch.window, normalizer)
    return LSTMRegressor(prof.arch, config.train_config, normalizer)


def _concept_ues(dataset: Dataset, concept: int) -> list[str]:
    ues = dataset.ue_ids(concept)
    if not ues:
        raise ConfigError(f"dataset has no UEs labelled with concept {concept}")
    return ues


def _lengths(dataset: Dataset, ue: str, start: int = 0, end: int | None = None) -> list[int]:
    return [r.length_bytes for r in dataset.trace(ue, start, end)]


def training_stream(dataset: Dataset, config: ExperimentConfig) -> tuple[str, list[int]]:
    """The single pre-drift interaction the model is trained on."""
    ues = _concept_ues(dataset, config.train_concept)
    ue = config.train_ue or ues[0]
    if ue not in ues:
        raise ConfigError(f"training UE {ue!r} is not in concept {config.train_concept}")
    return ue, _lengths(dataset, ue, 0, config.onset_ms())


def calibration_streams(dataset: Dataset, config: ExperimentConfig) -> list[list[int]]:
    """Training interaction first, then every other pre-drift interaction of the same concept."""
    train_ue, train_lengths = training_stream(dataset, config)
    others = [_lengths(dataset, ue, 0, config.onset_ms())
              for ue in _concept_ues(dataset, config.train_concept) if ue != train_ue]
    return [train_lengths, *others]


def drift_stream(dataset: Dataset, config: ExperimentConfig, concept: int | None = None,
                 window: int | None = None) -> WindowSet:
    """Windows of the drifted concept, built per UE then merged in target-time order."""
    concept = config.target_concept if concept is None else concept
    window = config.model_profile.arch.window if window is None else window
    parts = []
    for ue in _concept_ues(dataset, concept):
        trace = dataset.trace(ue)
        parts.append(make_windows([r.length_bytes for r in trace], window, Normalizer(),
                                  timestamps=[r.timestamp_ms for r in trace], source=ue))
    merged = WindowSet.concat(parts, window)
    if len(merged) == 0:
        return merged
    order = np.lexsort((merged.source.astype(str), merged.t))
    merged = merged[order]
    if config.max_batches is not None:
        merged = merged[:config.max_batches * config.beta]
    return merged


def train_model(dataset: Dataset, config: ExperimentConfig):
    model = new_model(config)
    _, lengths = training_stream(dataset, config)
    samples = make_windows(lengths, model.window, model.normalizer)
    model.fit(samples, epochs=config.train_config.epochs, seed=config.train_config.seed)
    return model


def calibrate_detector(model, dataset: Dataset, config: ExperimentConfig, ref: str | None = None) -> DetectorState:
    return calibrate(model, calibration_streams(dataset, config), config.n_factor, ref)


def run_modes(model, detector: DetectorState, dataset: Dataset, config: ExperimentConfig,
              modes=(Mode.BASELINE, Mode.NON_PERSISTENT, Mode.PERSISTENT),
              concept: int | None = None) -> dict[str, RunReport]:
    stream = drift_stream(dataset, config, concept, model.window)
    initial_pool = None
    if config.pool_seed_initial:
        _, lengths = training_stream(dataset, config)
        initial_pool = make_windows(lengths, model.window, model.normalizer)
    reports = {}
    for mode in modes:
        mode = Mode(mode)
        reports[mode.label] = run_stream(model, detector, config.adaptation(mode), stream, initial_pool)
    return reports
