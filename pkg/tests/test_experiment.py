import dataclasses

import numpy as np
import pytest

from coredrift import experiment as ex
from coredrift.adaptor import Mode
from coredrift.errors import ConfigError
from coredrift.predictor import make_windows


@pytest.fixture
def small_config(small_timeline):
    return ex.ExperimentConfig(timeline=small_timeline, max_batches=None)


def test_concept1_interaction_shows_learning():
    # final epoch loss under 10% of the first epoch's, default config
    cfg = ex.ExperimentConfig()
    ds = ex.build_dataset(cfg)
    model = ex.train_model(ds, cfg)
    assert len(model.history) == cfg.train_config.epochs
    assert model.history[-1] < 0.1 * model.history[0]


def test_training_stream_is_one_pre_onset_interaction(small_config):
    ds = ex.build_dataset(small_config)
    ue, lengths = ex.training_stream(ds, small_config)
    assert ue == ds.ue_ids(1)[0]
    assert lengths == [r.length_bytes for r in ds.trace(ue) if r.timestamp_ms < 20_000]


def test_calibration_streams_lead_with_training_stream(small_config):
    ds = ex.build_dataset(small_config)
    streams = ex.calibration_streams(ds, small_config)
    assert streams[0] == ex.training_stream(ds, small_config)[1]
    assert len(streams) == len(ds.ue_ids(1))


def test_unknown_training_ue(small_config):
    cfg = dataclasses.replace(small_config, train_ue="nobody")
    with pytest.raises(ConfigError):
        ex.training_stream(ex.build_dataset(cfg), cfg)


def test_drift_stream_never_spans_ues(small_config):
    ds = ex.build_dataset(small_config)
    stream = ex.drift_stream(ds, small_config)
    assert np.all(np.diff(stream.t) >= 0)
    for ue in ds.ue_ids(2):
        mine = stream[stream.source == ue]
        trace = ds.trace(ue)
        own = make_windows([r.length_bytes for r in trace], 10, timestamps=[r.timestamp_ms for r in trace])
        np.testing.assert_array_equal(mine.x, own.x)
        np.testing.assert_array_equal(mine.y, own.y)


def test_drift_stream_cap(small_config):
    ds = ex.build_dataset(small_config)
    capped = ex.drift_stream(ds, dataclasses.replace(small_config, max_batches=3))
    assert len(capped) == 30
    np.testing.assert_array_equal(capped.x, ex.drift_stream(ds, small_config).x[:30])


def test_adaptation_config_follows_profile():
    cfg = ex.ExperimentConfig(profile="paper")
    assert cfg.adaptation(Mode.PERSISTENT).tau == 25
    assert cfg.adaptation(Mode.PERSISTENT).effective_theta == 5
    assert cfg.adaptation(Mode.NON_PERSISTENT).effective_theta == 0
    assert ex.ExperimentConfig(profile="ci").adaptation("p").tau == 10


def test_config_round_trip_and_digest(small_config):
    back = ex.ExperimentConfig.from_dict(small_config.to_dict())
    assert back.to_dict() == small_config.to_dict()
    assert back.digest() == small_config.digest()
    assert small_config.with_seed(1).digest() != small_config.digest()


def test_config_rejects_unknown_profile():
    with pytest.raises(ConfigError):
        ex.ExperimentConfig(profile="huge")


def test_onset_is_first_foreign_activation(small_config):
    assert small_config.onset_ms() == 20_000
    assert dataclasses.replace(small_config, drift_onset_ms=5).onset_ms() == 5
