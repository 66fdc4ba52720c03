"""Seeded packet-trace emulation of UE classes requesting images.

Each UE belongs to one concept class. A class fixes the image sizes a UE may
request, how often it requests, and when the class first appears. Requests
are served as MTU-sized segments sent back to back, 1 ms apart.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

from .errors import DatasetIOError, InvalidArgumentError, InvalidProfileError, SchemaError

log = logging.getLogger(__name__)

HEADER_OVERHEAD_BYTES = 54
DEFAULT_MTU = 1400
INTRA_BURST_MS = 1
CSV_FIELDS = ("timestamp_ms", "ue_id", "concept_id", "length_bytes", "direction")
DIRECTIONS = ("uplink", "downlink")


@dataclass(frozen=True)
class PacketRecord:
    timestamp_ms: int
    ue_id: str
    concept_id: int | None
    length_bytes: int
    direction: str = "uplink"


@dataclass(frozen=True)
class ConceptProfile:
    concept_id: int
    image_dims: tuple[int, ...]
    request_period_ms: int
    period_jitter_frac: float = 0.2
    activation_time_ms: int = 0
    bytes_per_pixel: int = 3
    mtu_bytes: int = DEFAULT_MTU
    header_overhead_bytes: int = HEADER_OVERHEAD_BYTES

    def __post_init__(self):
        object.__setattr__(self, "image_dims", tuple(sorted(set(self.image_dims))))
        if self.request_period_ms <= 0:
            raise InvalidProfileError(f"request_period_ms must be positive, got {self.request_period_ms}")
        if not 0.0 <= self.period_jitter_frac < 1.0:
            raise InvalidProfileError(f"period_jitter_frac must lie in [0, 1), got {self.period_jitter_frac}")
        if self.activation_time_ms < 0:
            raise InvalidProfileError("activation_time_ms must be non-negative")
        if self.bytes_per_pixel <= 0 or self.mtu_bytes <= 0 or self.header_overhead_bytes < 0:
            raise InvalidProfileError("bytes_per_pixel and mtu_bytes must be positive")


def default_profiles(duration_ms: int = 960_000) -> list[ConceptProfile]:
    """Three classes introduced at 0, 1/3 and 2/3 of the run."""
    return [
        ConceptProfile(1, (16, 32), 200, activation_time_ms=0),
        ConceptProfile(2, (48, 128), 500, activation_time_ms=duration_ms // 3),
        ConceptProfile(3, (256, 512), 1000, activation_time_ms=2 * duration_ms // 3),
    ]


@dataclass(frozen=True)
class EmulationTimeline:
    profiles: tuple[ConceptProfile, ...] = field(default_factory=lambda: tuple(default_profiles()))
    ues_per_concept: int = 3
    duration_ms: int = 960_000
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "profiles", tuple(self.profiles))
        if self.ues_per_concept < 0:
            raise InvalidArgumentError("ues_per_concept must be non-negative")
        if self.duration_ms <= 0:
            raise InvalidArgumentError("duration_ms must be positive")
        if self.profiles and self.duration_ms <= max(p.activation_time_ms for p in self.profiles):
            raise InvalidArgumentError("duration_ms must exceed every activation time")

    def profile(self, concept_id: int) -> ConceptProfile:
        for p in self.profiles:
            if p.concept_id == concept_id:
                return p
        raise KeyError(concept_id)

    def to_dict(self) -> dict:
        d = asdict(self)
        for p in d["profiles"]:
            p["image_dims"] = list(p["image_dims"])
        return d

    @classmethod
    def from_dict(cls, d: Mapping) -> "EmulationTimeline":
        d = dict(d)
        duration = int(d.get("duration_ms", 960_000))
        if "profiles" in d:
            profiles = tuple(ConceptProfile(**{**p, "image_dims": tuple(p["image_dims"])}) for p in d["profiles"])
        else:
            profiles = tuple(default_profiles(duration))
        return cls(
            profiles=profiles,
            ues_per_concept=int(d.get("ues_per_concept", 3)),
            duration_ms=duration,
            seed=int(d.get("seed", 0)),
        )


def payload_bytes(dim: int, profile: ConceptProfile) -> int:
    if dim not in profile.image_dims:
        raise InvalidArgumentError(f"image dimension {dim} not offered by concept {profile.concept_id}")
    return dim * dim * profile.bytes_per_pixel + profile.header_overhead_bytes


def segment_payload(total_bytes: int, mtu_bytes: int) -> list[int]:
    if total_bytes < 1 or mtu_bytes < 1:
        raise InvalidArgumentError("total_bytes and mtu_bytes must be >= 1")
    full, rem = divmod(total_bytes, mtu_bytes)
    return [mtu_bytes] * full + ([rem] if rem else [])


def ue_stream(seed: int, ue_id: str) -> np.random.Generator:
    """Independent counter-based stream keyed on (seed, ue_id)."""
    digest = hashlib.sha256(ue_id.encode("utf-8")).digest()
    words = [int.from_bytes(digest[i:i + 4], "little") for i in range(0, 16, 4)]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed & (2**64 - 1), *words])))


def emulate_ue(
    profile: ConceptProfile,
    ue_id: str,
    duration_ms: int,
    rng: np.random.Generator,
) -> list[PacketRecord]:
    if not profile.image_dims:
        raise InvalidProfileError(f"concept {profile.concept_id} has no image sizes")
    if duration_ms <= profile.activation_time_ms:
        raise InvalidArgumentError("duration_ms must exceed the profile activation time")

    dims = profile.image_dims
    lo = profile.request_period_ms * (1.0 - profile.period_jitter_frac)
    hi = profile.request_period_ms * (1.0 + profile.period_jitter_frac)
    records = []
    clock = float(profile.activation_time_ms)
    free_at = 0
    while clock < duration_ms:
        # a burst never starts before the previous one has finished
        start = max(int(round(clock)), free_at)
        dim = dims[int(rng.integers(len(dims)))]
        for k, length in enumerate(segment_payload(payload_bytes(dim, profile), profile.mtu_bytes)):
            records.append(PacketRecord(start + k * INTRA_BURST_MS, ue_id, profile.concept_id, length))
        free_at = records[-1].timestamp_ms + INTRA_BURST_MS
        clock += lo if lo == hi else rng.uniform(lo, hi)
    return records


class Dataset(Sequence[PacketRecord]):
    """Time-sorted packet records with per-UE access and CSV serialization."""

    def __init__(self, records: Iterable[PacketRecord] = (), diagnostics: Sequence[str] = ()):
        self.records = sorted(records, key=lambda r: (r.timestamp_ms, r.ue_id))
        self.diagnostics = list(diagnostics)
        self._by_ue = None

    def __len__(self) -> int:
        return len(self.records)

    def __getitem__(self, i):
        return self.records[i]

    def __iter__(self) -> Iterator[PacketRecord]:
        return iter(self.records)

    def ue_ids(self, concept_id: int | None = None) -> list[str]:
        seen = {}
        for r in self.records:
            if concept_id is None or r.concept_id == concept_id:
                seen.setdefault(r.ue_id, None)
        return sorted(seen)

    def by_ue(self) -> dict[str, list[PacketRecord]]:
        if self._by_ue is None:
            out: dict[str, list[PacketRecord]] = {}
            for r in self.records:
                out.setdefault(r.ue_id, []).append(r)
            self._by_ue = out
        return self._by_ue

    def trace(self, ue_id: str, start_ms: int = 0, end_ms: int | None = None) -> list[PacketRecord]:
        return [r for r in self.by_ue().get(ue_id, ())
                if r.timestamp_ms >= start_ms and (end_ms is None or r.timestamp_ms < end_ms)]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_FIELDS)
        for r in self.records:
            w.writerow((r.timestamp_ms, r.ue_id, "" if r.concept_id is None else r.concept_id, r.length_bytes, r.direction))
        return buf.getvalue()

    def write_csv(self, path: str | Path) -> None:
        try:
            Path(path).write_bytes(self.to_csv().encode("utf-8"))
        except OSError as e:
            raise DatasetIOError(f"cannot write dataset to {path}: {e}") from e

    def sha256(self) -> str:
        return hashlib.sha256(self.to_csv().encode("utf-8")).hexdigest()


def emulate_experiment(timeline: EmulationTimeline) -> Dataset:
    records: list[PacketRecord] = []
    for profile in timeline.profiles:
        for k in range(timeline.ues_per_concept):
            ue_id = f"c{profile.concept_id}-ue{k:02d}"
            records.extend(emulate_ue(profile, ue_id, timeline.duration_ms, ue_stream(timeline.seed, ue_id)))
    return Dataset(records)


IDENTITY_COLUMNS = {name: name for name in CSV_FIELDS}
_REQUIRED = ("timestamp_ms", "ue_id", "length_bytes")


def load_dataset(path: str | Path, column_map: Mapping[str, str] | None = None) -> Dataset:
    """Read a CSV trace, mapping its columns onto record fields.

    ``column_map`` maps record field name to CSV header name. ``timestamp_ms``,
    ``ue_id`` and ``length_bytes`` are required; ``concept_id`` and
    ``direction`` are optional. Rows whose length or timestamp is not numeric
    are skipped and reported in ``Dataset.diagnostics`` (row 1 is the header).
    """
    column_map = dict(IDENTITY_COLUMNS if column_map is None else column_map)
    try:
        text = Path(path).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as e:
        raise DatasetIOError(f"cannot read dataset {path}: {e}") from e

    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header is None:
        log.warning("dataset %s is empty", path)
        return Dataset()
    for name in _REQUIRED:
        if name not in column_map:
            raise SchemaError(f"column map has no entry for required field {name!r}")
    index = {}
    for name, col in column_map.items():
        if name not in CSV_FIELDS:
            raise SchemaError(f"unknown record field {name!r} in column map")
        if col not in header:
            raise SchemaError(f"column {col!r} (for {name}) not in header {header}")
        index[name] = header.index(col)

    records, diagnostics = [], []
    for rowno, row in enumerate(reader, start=2):
        if not row:
            continue
        try:
            length = _as_int(row[index["length_bytes"]])
            ts = _as_int(row[index["timestamp_ms"]])
        except (ValueError, IndexError) as e:
            diagnostics.append(f"row {rowno}: {e}")
            continue
        if length < 1 or ts < 0:
            diagnostics.append(f"row {rowno}: length must be >= 1 and timestamp >= 0")
            continue
        concept = row[index["concept_id"]].strip() if "concept_id" in index else ""
        direction = row[index["direction"]].strip() if "direction" in index else "uplink"
        records.append(PacketRecord(ts, row[index["ue_id"]], int(concept) if concept else None, length,
                                    direction if direction in DIRECTIONS else "uplink"))
    for d in diagnostics:
        log.warning("%s: %s", path, d)
    if not records and not diagnostics:
        log.warning("dataset %s has no data rows", path)
    return Dataset(records, diagnostics)


def _as_int(text: str) -> int:
    v = float(text)
    if not math.isfinite(v):
        raise ValueError(f"non-finite value {text!r}")
    if v != int(v):
        raise ValueError(f"non-integer value {text!r}")
    return int(v)


def request_starts(trace: Sequence[PacketRecord], burst_gap_ms: int = INTRA_BURST_MS) -> list[int]:
    """Start times of request bursts: packets closer than ``burst_gap_ms`` join one burst."""
    starts = []
    prev = None
    for r in trace:
        if prev is None or r.timestamp_ms - prev > burst_gap_ms:
            starts.append(r.timestamp_ms)
        prev = r.timestamp_ms
    return starts


def concept_statistics(dataset: Dataset) -> dict[int, dict[str, float]]:
    """Per-concept request and packet timing summary, pooled over UEs."""
    stats: dict[int, dict[str, float]] = {}
    per_concept: dict[int, list[list[PacketRecord]]] = {}
    for trace in dataset.by_ue().values():
        per_concept.setdefault(trace[0].concept_id, []).append(trace)
    for concept, traces in sorted(per_concept.items(), key=lambda kv: (kv[0] is None, kv[0] or 0)):
        req_gaps, pkt_gaps, lengths, n_req = [], [], [], 0
        for trace in traces:
            starts = request_starts(trace)
            n_req += len(starts)
            req_gaps.extend(np.diff(starts).tolist())
            pkt_gaps.extend(np.diff([r.timestamp_ms for r in trace]).tolist())
            lengths.extend(r.length_bytes for r in trace)
        stats[concept] = {
            "ues": len(traces),
            "packets": len(lengths),
            "requests": n_req,
            "mean_request_gap_ms": float(np.mean(req_gaps)) if req_gaps else float("nan"),
            "mean_packet_interarrival_ms": float(np.mean(pkt_gaps)) if pkt_gaps else float("nan"),
            "mean_length_bytes": float(np.mean(lengths)) if lengths else float("nan"),
            "std_length_bytes": float(np.std(lengths)) if lengths else float("nan"),
        }
    return stats


def load_timeline(path: str | Path) -> EmulationTimeline:
    return EmulationTimeline.from_dict(json.loads(Path(path).read_text()))
