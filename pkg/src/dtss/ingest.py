"""Observation record schema, wire parsing, and routing into the twin.

Wire format: UTF-8 newline-delimited JSON, one object per line, fields
seq, source_id, modality, timestamp_ms, subject_id?, position? ([x,y,z]),
payload{...}. Files carry the `.obs.ndjson` extension. Serialization is
canonical (sorted keys, no whitespace) so equal records give equal bytes.
"""

import json
import math
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterator, Optional

from dtss.errors import (
    InvalidFeatureError,
    InvalidStateError,
    MalformedRecordError,
    SchemaViolationError,
    StaleSequenceError,
    UnknownSourceError,
)
from dtss.twin import EntityKind, EntityState, WorldRegistry, validate_entity_id


class Modality(str, Enum):
    SONAR_CONTACT = "SonarContact"
    LIDAR_RETURN = "LidarReturn"
    CCTV_TRACK = "CctvTrack"
    RF_DETECTION = "RfDetection"
    ACOUSTIC_EVENT = "AcousticEvent"
    HYDROPHONE_EVENT = "HydrophoneEvent"
    FACE_CAPTURE = "FaceCapture"
    MOBILE_NETWORK_EVENT = "MobileNetworkEvent"
    CYBER_POST = "CyberPost"
    OFFICER_REPORT = "OfficerReport"


# Track-bearing modalities upsert the perceived subject entity; their
# payload names the perceived entity kind so first-sight auto-registration
# knows what to create.
TRACK_MODALITIES = {
    Modality.SONAR_CONTACT, Modality.LIDAR_RETURN, Modality.CCTV_TRACK,
    Modality.RF_DETECTION, Modality.ACOUSTIC_EVENT, Modality.HYDROPHONE_EVENT,
}

REQUIRED_PAYLOAD_KEYS = {
    Modality.SONAR_CONTACT: {"kind", "range_m", "bearing_deg"},
    Modality.LIDAR_RETURN: {"kind", "range_m"},
    Modality.CCTV_TRACK: {"kind", "conf"},
    Modality.RF_DETECTION: {"kind", "freq_mhz", "rssi_dbm"},
    Modality.ACOUSTIC_EVENT: {"kind", "db"},
    Modality.HYDROPHONE_EVENT: {"kind", "db", "depth_m"},
    Modality.FACE_CAPTURE: {"feature"},
    Modality.MOBILE_NETWORK_EVENT: {"imsi", "cell_id", "event"},
    Modality.CYBER_POST: {"text", "platform"},
    Modality.OFFICER_REPORT: {"text"},
}

MOBILE_EVENTS = {"register", "call", "data"}
FEATURE_DIM = 128
FEATURE_NORM_TOL = 1e-6


@dataclass(frozen=True)
class ObservationRecord:
    seq: int
    source_id: str
    modality: Modality
    timestamp_ms: int
    subject_id: Optional[str] = None
    position: Optional[tuple[float, float, float]] = None
    payload: dict = field(default_factory=dict)


@dataclass(frozen=True)
class WatchlistEntry:
    suspect_id: str
    feature: tuple[float, ...]
    label: str = ""


@dataclass
class Watchlist:
    entries: list[WatchlistEntry]

    def __post_init__(self):
        seen = set()
        for e in self.entries:
            if e.suspect_id in seen:
                raise SchemaViolationError(f"duplicate suspect_id: {e.suspect_id}")
            seen.add(e.suspect_id)
            check_feature(e.feature)


def check_feature(feature) -> None:
    if len(feature) != FEATURE_DIM:
        raise InvalidFeatureError(
            f"feature must have {FEATURE_DIM} components, got {len(feature)}")
    norm = math.sqrt(sum(float(v) * float(v) for v in feature))
    if abs(norm - 1.0) > FEATURE_NORM_TOL:
        raise InvalidFeatureError(f"feature norm {norm} not within 1e-6 of 1")


def _require_finite(value, what: str) -> float:
    if not isinstance(value, (int, float)) or isinstance(value, bool):
        raise SchemaViolationError(f"{what} must be a number, got {value!r}")
    v = float(value)
    if not math.isfinite(v):
        raise SchemaViolationError(f"{what} must be finite, got {value!r}")
    return v


def parse_observation(line: str) -> ObservationRecord:
    """Parse one wire line; syntax errors raise MalformedRecordError and
    schema errors raise SchemaViolationError. Extra payload keys are kept."""
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise MalformedRecordError(f"bad record syntax: {exc}") from None
    if not isinstance(obj, dict):
        raise MalformedRecordError("record line must be a JSON object")

    for key in ("seq", "source_id", "modality", "timestamp_ms", "payload"):
        if key not in obj:
            raise SchemaViolationError(f"missing required field: {key}")
    seq = obj["seq"]
    if not isinstance(seq, int) or isinstance(seq, bool) or seq < 0:
        raise SchemaViolationError(f"seq must be a non-negative integer, got {seq!r}")
    ts = obj["timestamp_ms"]
    if not isinstance(ts, int) or isinstance(ts, bool) or ts < 0:
        raise SchemaViolationError(
            f"timestamp_ms must be a non-negative integer, got {ts!r}")
    try:
        source_id = validate_entity_id(obj["source_id"])
    except InvalidStateError as exc:
        raise SchemaViolationError(str(exc)) from None
    try:
        modality = Modality(obj["modality"])
    except ValueError:
        raise SchemaViolationError(f"unknown modality: {obj['modality']!r}") from None

    subject_id = obj.get("subject_id")
    if subject_id is not None:
        try:
            subject_id = validate_entity_id(subject_id)
        except InvalidStateError as exc:
            raise SchemaViolationError(str(exc)) from None

    position = obj.get("position")
    if position is not None:
        if not isinstance(position, list) or len(position) != 3:
            raise SchemaViolationError(f"position must be [x,y,z], got {position!r}")
        position = tuple(_require_finite(v, "position component") for v in position)

    payload = obj["payload"]
    if not isinstance(payload, dict):
        raise SchemaViolationError("payload must be an object")
    missing = REQUIRED_PAYLOAD_KEYS[modality] - payload.keys()
    if missing:
        raise SchemaViolationError(
            f"{modality.value} payload missing keys: {sorted(missing)}")

    if modality is Modality.FACE_CAPTURE:
        feature = payload["feature"]
        if not isinstance(feature, list):
            raise SchemaViolationError("feature must be a list of numbers")
        try:
            check_feature([_require_finite(v, "feature component") for v in feature])
        except InvalidFeatureError as exc:
            raise SchemaViolationError(str(exc)) from None
    if modality is Modality.MOBILE_NETWORK_EVENT:
        if payload["event"] not in MOBILE_EVENTS:
            raise SchemaViolationError(
                f"mobile event must be one of {sorted(MOBILE_EVENTS)}")
    if modality in TRACK_MODALITIES:
        try:
            EntityKind(payload["kind"])
        except ValueError:
            raise SchemaViolationError(
                f"unknown track kind: {payload['kind']!r}") from None

    return ObservationRecord(
        seq=seq, source_id=source_id, modality=modality, timestamp_ms=ts,
        subject_id=subject_id, position=position, payload=dict(payload))


def serialize_observation(rec: ObservationRecord) -> str:
    obj = {
        "seq": rec.seq,
        "source_id": rec.source_id,
        "modality": rec.modality.value,
        "timestamp_ms": rec.timestamp_ms,
        "payload": rec.payload,
    }
    if rec.subject_id is not None:
        obj["subject_id"] = rec.subject_id
    if rec.position is not None:
        obj["position"] = list(rec.position)
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


class Router:
    """Feeds parsed observations into a world registry.

    Per-source sequence numbers must strictly increase (gaps allowed); a
    regression means the simulator or transport is broken and is rejected.
    """

    def __init__(self, registry: WorldRegistry,
                 cell_positions: Optional[dict[str, tuple[float, float, float]]] = None):
        self.registry = registry
        self.cell_positions = cell_positions or {}
        self._last_seq: dict[str, int] = {}

    def route_observation(self, rec: ObservationRecord) -> list[str]:
        """Apply a record; returns the ids of entities that were updated."""
        if rec.source_id not in self.registry:
            raise UnknownSourceError(f"unknown source: {rec.source_id}")
        src_kind = self.registry.get(rec.source_id).kind
        if src_kind not in (EntityKind.SENSOR, EntityKind.CYBER_SOURCE):
            raise UnknownSourceError(
                f"source {rec.source_id} has kind {src_kind.value}, "
                "expected Sensor or CyberSource")
        last = self._last_seq.get(rec.source_id)
        if last is not None and rec.seq <= last:
            raise StaleSequenceError(
                f"seq {rec.seq} not greater than last {last} for {rec.source_id}")
        self._last_seq[rec.source_id] = rec.seq

        touched: list[str] = []
        if rec.modality in TRACK_MODALITIES or rec.modality is Modality.FACE_CAPTURE:
            if rec.subject_id is None:
                return touched
            kind = (EntityKind(rec.payload["kind"])
                    if rec.modality in TRACK_MODALITIES else EntityKind.PERSON_TRACK)
            attrs = {k: v for k, v in rec.payload.items()
                     if isinstance(v, (int, float, str, bool)) and k != "kind"}
            attrs["observed_by"] = rec.source_id
            state = EntityState(timestamp=rec.timestamp_ms, position=rec.position,
                                attributes=attrs)
            self._upsert(rec.subject_id, kind, state)
            touched.append(rec.subject_id)
        elif rec.modality is Modality.MOBILE_NETWORK_EVENT:
            imsi = str(rec.payload["imsi"])
            device_id = f"imsi-{imsi}"
            cell = str(rec.payload["cell_id"])
            pos = rec.position or self.cell_positions.get(cell)
            state = EntityState(
                timestamp=rec.timestamp_ms, position=pos,
                attributes={"imsi": imsi, "cell_id": cell,
                            "event": rec.payload["event"]})
            self._upsert(device_id, EntityKind.MOBILE_DEVICE, state)
            touched.append(device_id)
        else:
            # CyberPost / OfficerReport: update the emitting source only.
            attrs = {k: v for k, v in rec.payload.items()
                     if isinstance(v, (int, float, str, bool))}
            self.registry.apply_observation(
                rec.source_id,
                EntityState(timestamp=rec.timestamp_ms, attributes=attrs))
            touched.append(rec.source_id)
        return touched

    def _upsert(self, entity_id: str, kind: EntityKind, state: EntityState) -> None:
        if entity_id in self.registry:
            self.registry.apply_observation(entity_id, state)
        else:
            self.registry.register_entity(kind, entity_id, state)


def replay_stream(path, speed: float = 0.0) -> Iterator[ObservationRecord]:
    """Yield records from a `.obs.ndjson` file in file order.

    speed > 0 paces delivery at delta-timestamp / speed; speed 0 replays
    as fast as possible. A malformed line aborts with its line number;
    everything before it has already been yielded.
    """
    if speed < 0:
        raise ValueError(f"speed must be >= 0, got {speed}")
    prev_ts = None
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = parse_observation(line)
            except (MalformedRecordError, SchemaViolationError) as exc:
                raise MalformedRecordError(
                    f"line {line_no}: {exc}", line_no=line_no) from None
            if speed > 0 and prev_ts is not None and rec.timestamp_ms > prev_ts:
                time.sleep((rec.timestamp_ms - prev_ts) / 1000.0 / speed)
            prev_ts = rec.timestamp_ms
            yield rec
