"""Digital-entity registry: mirrors world entities and syncs their state.

State merging is last-writer-wins per attribute, keyed by timestamp: the
authoritative definition is "replay all raw updates in timestamp order,
merging attributes as you go" (ties keep application order, and a second
update at an already-present timestamp replaces that raw update wholly).
Late-arriving updates are spliced into the raw sequence and the cumulative
history is rebuilt from the splice point, which makes the final entity
independent of arrival order.
"""

import hashlib
import json
import re
import threading
from bisect import bisect_left, bisect_right
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

from dtss.errors import DuplicateIdError, InvalidStateError, UnknownEntityError

_ID_RE = re.compile(r"^[a-zA-Z0-9_-]{1,64}$")


def validate_entity_id(value: str) -> str:
    if not isinstance(value, str) or not _ID_RE.match(value):
        raise InvalidStateError(f"invalid entity id: {value!r}")
    return value


class EntityKind(str, Enum):
    OFFICER = "Officer"
    CYBER_SOURCE = "CyberSource"
    SENSOR = "Sensor"
    PERSON_TRACK = "PersonTrack"
    UAV = "UAV"
    USV = "USV"
    UUV = "UUV"
    GROUND_VEHICLE = "GroundVehicle"
    OBJECT_TRACK = "ObjectTrack"
    ZONE = "Zone"
    MOBILE_DEVICE = "MobileDevice"

    @property
    def is_vehicle(self) -> bool:
        return self in (EntityKind.UAV, EntityKind.USV, EntityKind.UUV,
                        EntityKind.GROUND_VEHICLE)

    @property
    def is_uxv(self) -> bool:
        return self in (EntityKind.UAV, EntityKind.USV, EntityKind.UUV)


@dataclass(frozen=True)
class WorldBounds:
    x_min: float
    y_min: float
    x_max: float
    y_max: float

    def contains(self, x: float, y: float) -> bool:
        return self.x_min <= x <= self.x_max and self.y_min <= y <= self.y_max


@dataclass(frozen=True)
class EntityState:
    timestamp: int
    position: Optional[tuple[float, float, float]] = None
    attributes: dict = field(default_factory=dict)

    def merged_with(self, update: "EntityState") -> "EntityState":
        """Cumulative state after applying `update` on top of self."""
        return EntityState(
            timestamp=update.timestamp,
            position=update.position if update.position is not None else self.position,
            attributes={**self.attributes, **update.attributes},
        )


@dataclass
class DigitalEntity:
    id: str
    kind: EntityKind
    updates: list[EntityState] = field(default_factory=list)  # raw, ts-ordered
    history: list[EntityState] = field(default_factory=list)  # cumulative

    @property
    def current(self) -> EntityState:
        return self.history[-1]

    def state_at(self, at: int) -> Optional[EntityState]:
        """Latest cumulative state with timestamp <= at, if any."""
        ts_list = [s.timestamp for s in self.history]
        idx = bisect_right(ts_list, at) - 1
        return self.history[idx] if idx >= 0 else None


@dataclass(frozen=True)
class WorldSnapshot:
    at: int
    entities: dict  # id -> EntityState


@dataclass(frozen=True)
class RecommendedAction:
    t: int
    action: str
    subject: str
    detail: str = ""


class WorldRegistry:
    """Registry of digital entities for one world/run.

    Mutations are serialized under a single lock; snapshots take the same
    lock briefly and return immutable data.
    """

    def __init__(self, bounds: WorldBounds):
        self.bounds = bounds
        self._entities: dict[str, DigitalEntity] = {}
        self._ts_index: dict[str, list[int]] = {}
        self._lock = threading.Lock()
        self.recommended_actions: list[RecommendedAction] = []

    def _check_state(self, state: EntityState) -> None:
        if not isinstance(state.timestamp, int) or state.timestamp < 0:
            raise InvalidStateError(f"negative or non-integer timestamp: {state.timestamp}")
        if state.position is not None:
            x, y = state.position[0], state.position[1]
            if not self.bounds.contains(x, y):
                raise InvalidStateError(
                    f"position ({x}, {y}) outside world bounds {self.bounds}")

    def register_entity(self, kind: EntityKind, entity_id: str,
                        initial: EntityState) -> DigitalEntity:
        validate_entity_id(entity_id)
        self._check_state(initial)
        with self._lock:
            if entity_id in self._entities:
                raise DuplicateIdError(f"entity already registered: {entity_id}")
            ent = DigitalEntity(id=entity_id, kind=kind,
                                updates=[initial], history=[initial])
            self._entities[entity_id] = ent
            self._ts_index[entity_id] = [initial.timestamp]
            return ent

    def get(self, entity_id: str) -> DigitalEntity:
        try:
            return self._entities[entity_id]
        except KeyError:
            raise UnknownEntityError(f"unknown entity: {entity_id}") from None

    def __contains__(self, entity_id: str) -> bool:
        return entity_id in self._entities

    def entities(self) -> list[DigitalEntity]:
        return list(self._entities.values())

    def apply_observation(self, entity_id: str, update: EntityState) -> DigitalEntity:
        ent = self.get(entity_id)
        self._check_state(update)
        with self._lock:
            ts_list = self._ts_index[entity_id]
            ts = update.timestamp
            if ts >= ts_list[-1]:
                if ts == ts_list[-1]:
                    ent.updates[-1] = update  # same-timestamp: replace wholly
                    base = ent.history[-2] if len(ent.history) > 1 else None
                    ent.history[-1] = base.merged_with(update) if base else update
                else:
                    ent.updates.append(update)
                    ent.history.append(ent.history[-1].merged_with(update))
                    ts_list.append(ts)
                return ent
            # Late update: splice into the raw sequence, rebuild the suffix.
            idx = bisect_left(ts_list, ts)
            if idx < len(ts_list) and ts_list[idx] == ts:
                ent.updates[idx] = update
            else:
                ent.updates.insert(idx, update)
                ts_list.insert(idx, ts)
            prev = ent.history[idx - 1] if idx > 0 else None
            rebuilt = ent.history[:idx]
            for raw in ent.updates[idx:]:
                prev = prev.merged_with(raw) if prev is not None else raw
                rebuilt.append(prev)
            ent.history = rebuilt
            return ent

    def snapshot(self, at: int) -> WorldSnapshot:
        if at < 0:
            raise InvalidStateError(f"snapshot time must be >= 0, got {at}")
        with self._lock:
            out = {}
            for eid, ent in self._entities.items():
                ts_list = self._ts_index[eid]
                idx = bisect_right(ts_list, at) - 1
                if idx >= 0:
                    out[eid] = ent.history[idx]
            return WorldSnapshot(at=at, entities=out)

    def recommend(self, t: int, action: str, subject: str, detail: str = "") -> None:
        """Append to the digital->real recommendation log (never mutates state)."""
        self.recommended_actions.append(
            RecommendedAction(t=t, action=action, subject=subject, detail=detail))

    def state_hash(self) -> str:
        """Canonical digest of all entity histories (determinism checks)."""
        doc = {}
        for eid in sorted(self._entities):
            ent = self._entities[eid]
            doc[eid] = [
                [s.timestamp, list(s.position) if s.position else None,
                 dict(sorted(s.attributes.items()))]
                for s in ent.history
            ]
        blob = json.dumps(doc, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()
