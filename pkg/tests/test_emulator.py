import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from coredrift.emulator import (
    ConceptProfile,
    Dataset,
    EmulationTimeline,
    PacketRecord,
    concept_statistics,
    default_profiles,
    emulate_experiment,
    emulate_ue,
    load_dataset,
    payload_bytes,
    request_starts,
    segment_payload,
    ue_stream,
)
from coredrift.errors import DatasetIOError, InvalidArgumentError, InvalidProfileError, SchemaError


def profile(**kw):
    base = dict(concept_id=1, image_dims=(16,), request_period_ms=1000, period_jitter_frac=0.0)
    return ConceptProfile(**{**base, **kw})


@pytest.mark.parametrize("dim,bpp,overhead,expected", [
    (16, 3, 54, 822),
    (32, 3, 54, 3126),
    (512, 3, 0, 786432),
])
def test_payload_bytes(dim, bpp, overhead, expected):
    p = profile(image_dims=(16, 32, 512), bytes_per_pixel=bpp, header_overhead_bytes=overhead)
    assert payload_bytes(dim, p) == expected


def test_payload_bytes_rejects_foreign_dim():
    with pytest.raises(InvalidArgumentError):
        payload_bytes(48, profile())


@pytest.mark.parametrize("total,mtu,expected", [
    (3000, 1400, [1400, 1400, 200]),
    (1400, 1400, [1400]),
    (822, 1400, [822]),
])
def test_segment_payload(total, mtu, expected):
    assert segment_payload(total, mtu) == expected


@given(st.integers(1, 10**6), st.integers(64, 20_000))
def test_segment_payload_properties(total, mtu):
    segs = segment_payload(total, mtu)
    assert len(segs) == -(-total // mtu)
    assert sum(segs) == total
    assert all(s == mtu for s in segs[:-1]) and 1 <= segs[-1] <= mtu


def test_jitter_free_schedule():
    recs = emulate_ue(profile(), "ue", 3500, ue_stream(0, "ue"))
    assert [r.timestamp_ms for r in recs] == [0, 1000, 2000, 3000]
    assert all(r.length_bytes == 822 for r in recs)


def test_burst_packets_are_1ms_apart():
    recs = emulate_ue(profile(image_dims=(48,)), "ue", 1500, ue_stream(0, "ue"))
    assert [r.length_bytes for r in recs[:5]] == [1400, 1400, 1400, 1400, 1366]
    assert [r.timestamp_ms for r in recs[:5]] == [0, 1, 2, 3, 4]


def test_concept3_requests_less_often_than_concept1():
    c1, _, c3 = default_profiles(60_000)
    c3 = ConceptProfile(3, c3.image_dims, c3.request_period_ms, activation_time_ms=0)
    n1 = len(request_starts(emulate_ue(c1, "a", 60_000, ue_stream(1, "a"))))
    n3 = len(request_starts(emulate_ue(c3, "b", 60_000, ue_stream(1, "b"))))
    assert n3 < n1


def test_emulate_ue_deterministic():
    p = default_profiles()[1]
    a = emulate_ue(p, "x", 400_000, ue_stream(5, "x"))
    b = emulate_ue(p, "x", 400_000, ue_stream(5, "x"))
    assert a == b


def test_empty_image_dims_is_invalid_profile():
    with pytest.raises(InvalidProfileError):
        emulate_ue(profile(image_dims=()), "x", 1000, ue_stream(0, "x"))


def test_duration_must_exceed_activation():
    with pytest.raises(InvalidArgumentError):
        emulate_ue(profile(activation_time_ms=500), "x", 500, ue_stream(0, "x"))


def test_profile_invariants_for_defaults():
    p1, p2, p3 = default_profiles()
    assert (p1.image_dims, p2.image_dims, p3.image_dims) == ((16, 32), (48, 128), (256, 512))
    assert p1.request_period_ms < p2.request_period_ms < p3.request_period_ms
    assert p1.activation_time_ms <= p2.activation_time_ms <= p3.activation_time_ms


def test_staged_introduction():
    tl = EmulationTimeline(profiles=tuple(default_profiles(960_000)), ues_per_concept=1, duration_ms=960_000, seed=3)
    ds = emulate_experiment(tl)
    early = [r for r in ds if r.timestamp_ms < 320_000]
    assert early and all(r.concept_id == 1 for r in early)
    assert {r.concept_id for r in ds if r.timestamp_ms >= 640_000} == {1, 2, 3}


def test_zero_ues_gives_empty_dataset(small_timeline):
    import dataclasses
    assert len(emulate_experiment(dataclasses.replace(small_timeline, ues_per_concept=0))) == 0


def test_dataset_sorted_and_per_ue_monotone(small_timeline):
    ds = emulate_experiment(small_timeline)
    keys = [(r.timestamp_ms, r.ue_id) for r in ds]
    assert keys == sorted(keys)
    for trace in ds.by_ue().values():
        ts = [r.timestamp_ms for r in trace]
        assert ts == sorted(ts)
        assert all(1 <= r.length_bytes <= 1400 for r in trace)


def test_request_gap_ordering(small_timeline):
    stats = concept_statistics(emulate_experiment(small_timeline))
    gaps = [stats[c]["mean_request_gap_ms"] for c in (1, 2, 3)]
    assert gaps[0] < gaps[1] < gaps[2]


def test_coexistence_every_window_has_records(small_timeline):
    ds = emulate_experiment(small_timeline)
    for p in small_timeline.profiles:
        times = np.array([r.timestamp_ms for r in ds if r.concept_id == p.concept_id])
        width = 3 * p.request_period_ms
        for start in range(p.activation_time_ms, small_timeline.duration_ms - width, p.request_period_ms):
            assert ((times >= start) & (times < start + width)).any()


def test_timeline_rejects_duration_before_last_activation():
    with pytest.raises(InvalidArgumentError):
        EmulationTimeline(profiles=tuple(default_profiles(960_000)), duration_ms=640_000)


def test_timeline_json_round_trip(small_timeline):
    assert EmulationTimeline.from_dict(small_timeline.to_dict()) == small_timeline


def test_csv_round_trip(tmp_path, small_timeline):
    ds = emulate_experiment(small_timeline)
    path = tmp_path / "d.csv"
    ds.write_csv(path)
    raw = path.read_bytes()
    assert raw.startswith(b"timestamp_ms,ue_id,concept_id,length_bytes,direction\n")
    assert b"\r" not in raw
    back = load_dataset(path)
    assert back.records == ds.records
    assert back.sha256() == ds.sha256()


def test_load_minimal_mapping(tmp_path):
    path = tmp_path / "t.csv"
    path.write_text("ts,ue,len\n5,ueA,100\n")
    ds = load_dataset(path, {"timestamp_ms": "ts", "ue_id": "ue", "length_bytes": "len"})
    assert ds.records == [PacketRecord(5, "ueA", None, 100, "uplink")]


def test_load_rejects_non_numeric_length_with_row_number(tmp_path, caplog):
    path = tmp_path / "t.csv"
    path.write_text("ts,ue,len\n5,ueA,abc\n6,ueA,10\n")
    ds = load_dataset(path, {"timestamp_ms": "ts", "ue_id": "ue", "length_bytes": "len"})
    assert len(ds) == 1
    assert ds.diagnostics and "row 2" in ds.diagnostics[0]


def test_load_empty_body_warns(tmp_path, caplog):
    path = tmp_path / "t.csv"
    path.write_text("timestamp_ms,ue_id,concept_id,length_bytes,direction\n")
    with caplog.at_level("WARNING"):
        ds = load_dataset(path)
    assert len(ds) == 0 and caplog.records


def test_load_missing_column_is_schema_error(tmp_path):
    path = tmp_path / "t.csv"
    path.write_text("ts,ue,len\n5,ueA,100\n")
    with pytest.raises(SchemaError):
        load_dataset(path, {"timestamp_ms": "ts", "ue_id": "ue", "length_bytes": "size"})


def test_load_unreadable_file_is_io_error(tmp_path):
    with pytest.raises(DatasetIOError):
        load_dataset(tmp_path / "missing.csv")


def test_load_sorts_per_ue(tmp_path):
    path = tmp_path / "t.csv"
    path.write_text("ts,ue,len\n9,a,1\n3,a,2\n5,b,3\n")
    ds = load_dataset(path, {"timestamp_ms": "ts", "ue_id": "ue", "length_bytes": "len"})
    assert [r.timestamp_ms for r in ds.trace("a")] == [3, 9]


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**64 - 1), st.sampled_from([0, 1, 2]))
def test_conservation(seed, which):
    p = ConceptProfile(*[(1, (16, 32), 200), (2, (48, 128), 500), (3, (256, 512), 1000)][which])
    recs = emulate_ue(p, "u", 20_000, ue_stream(seed, "u"))
    starts = request_starts(recs)
    # every request is one of the profile's payloads; packet bytes add up to them
    per_request = []
    for s, e in zip(starts, starts[1:] + [None]):
        per_request.append(sum(r.length_bytes for r in recs if r.timestamp_ms >= s and (e is None or r.timestamp_ms < e)))
    assert all(b in {payload_bytes(d, p) for d in p.image_dims} for b in per_request)
    assert sum(r.length_bytes for r in recs) == sum(per_request)


def test_dataset_is_a_sequence():
    ds = Dataset([PacketRecord(2, "b", 1, 5), PacketRecord(1, "a", 1, 4)])
    assert ds[0].ue_id == "a" and len(ds) == 2 and ds.ue_ids() == ["a", "b"]
