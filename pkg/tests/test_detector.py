import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from coredrift.detector import (
    DetectorState,
    Outcome,
    batch_statistic,
    calibrate,
    evaluate,
    threshold_from_errors,
)
from coredrift.errors import CalibrationError, InvalidArgumentError, NumericStateError, SchemaError
from coredrift.predictor import LinearAutoregressor, Normalizer, WindowSet, make_windows, mse_loss


def two_pass(values):
    n = len(values)
    mean = math.fsum(values) / n
    return mean, math.sqrt(math.fsum((v - mean) ** 2 for v in values) / n)


class ConstantModel:
    window = 3
    normalizer = Normalizer(1.0)

    def __init__(self, value):
        self.value = value

    def predict(self, X):
        return np.full(len(X), self.value, dtype=float)


def test_zero_variance():
    s = threshold_from_errors([1.0] * 5, 2)
    assert (s.mu, s.sigma, s.threshold) == (1.0, 0.0, 1.0)


def test_two_point_population_std():
    s = threshold_from_errors([0.0, 2.0], 2)
    assert (s.mu, s.sigma, s.threshold) == (1.0, 1.0, 3.0)


def test_matches_two_pass_oracle():
    errors = np.random.default_rng(0).exponential(0.05, 1000)
    s = threshold_from_errors(errors, 2)
    mu, sigma = two_pass(errors.tolist())
    assert abs(s.mu - mu) <= 1e-12 * mu
    assert abs(s.sigma - sigma) <= 1e-12 * sigma
    assert s.threshold == s.mu + 2 * s.sigma


def test_too_few_samples():
    with pytest.raises(CalibrationError):
        threshold_from_errors([0.3], 2)


def test_non_integer_n_warns(caplog):
    with caplog.at_level("WARNING"):
        threshold_from_errors([0.0, 1.0], 1.5)
    assert caplog.records


def test_non_positive_n_rejected():
    with pytest.raises(InvalidArgumentError):
        threshold_from_errors([0.0, 1.0], 0)


def test_calibrate_pools_every_stream():
    model = ConstantModel(0.0)
    streams = [[0, 0, 0, 1], [0, 0, 0, 0, 3]]
    s = calibrate(model, streams, n_factor=1)
    # windows: targets 1 | 0, 3  -> squared errors 1, 0, 9
    assert s.calibration_sample_count == 3
    mu, sigma = two_pass([1.0, 0.0, 9.0])
    assert s.mu == pytest.approx(mu, rel=1e-15) and s.sigma == pytest.approx(sigma, rel=1e-15)


def test_calibrate_needs_two_windows():
    with pytest.raises(CalibrationError):
        calibrate(ConstantModel(0.0), [[1, 2, 3, 4]], 2)


def test_recalibration_is_idempotent():
    lengths = np.random.default_rng(1).integers(1, 1400, 200).tolist()
    model = LinearAutoregressor(window=10)
    model.fit(make_windows(lengths))
    assert calibrate(model, [lengths], 2) == calibrate(model, [lengths], 2)


def test_batch_statistic():
    batch = WindowSet(np.zeros((3, 3)), np.array([0.0, 1.0, 2.0]))
    assert batch_statistic(ConstantModel(0.0), batch) == mse_loss([0, 0, 0], batch.y)
    assert batch_statistic(ConstantModel(1.0), batch[1:2]) == 0.0
    assert batch_statistic(ConstantModel(0.0), batch[2:3]) == 4.0
    with pytest.raises(InvalidArgumentError):
        batch_statistic(ConstantModel(0.0), batch[0:0])


def test_evaluate_boundary_is_in_threshold():
    s = DetectorState(1.0, 0.5, 2, 10)
    assert s.threshold == 2.0
    assert evaluate(s, 2.0) is Outcome.IN_THRESHOLD
    assert evaluate(s, 1.9) is Outcome.IN_THRESHOLD
    assert evaluate(s, np.nextafter(2.0, 3.0)) is Outcome.DRIFT_ALARM
    with pytest.raises(NumericStateError):
        evaluate(s, float("nan"))


@given(st.lists(st.floats(0, 10), min_size=2, max_size=50), st.lists(st.floats(0, 10), min_size=1, max_size=20))
def test_larger_n_never_adds_alarms(errors, stats):
    states = [threshold_from_errors(errors, n) for n in (1, 2, 3)]
    assert states[0].threshold <= states[1].threshold <= states[2].threshold
    alarms = [{i for i, v in enumerate(stats) if evaluate(s, v) is Outcome.DRIFT_ALARM} for s in states]
    assert alarms[2] <= alarms[1] <= alarms[0]


def test_state_file_round_trip(tmp_path):
    s = threshold_from_errors([0.1, 0.4, 0.2], 2, "model.json")
    s.save(tmp_path / "d.json")
    assert DetectorState.load(tmp_path / "d.json") == s


def test_state_file_with_tampered_threshold(tmp_path):
    import json
    p = tmp_path / "d.json"
    threshold_from_errors([0.1, 0.4], 2).save(p)
    d = json.loads(p.read_text())
    d["threshold"] += 1
    p.write_text(json.dumps(d))
    with pytest.raises(SchemaError):
        DetectorState.load(p)
