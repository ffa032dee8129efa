"""Typed, time-bounded relations between entities plus spatial queries.

Relations are valid on the half-open interval [valid_from, valid_to);
an open relation has valid_to = None. NEAR relations are stored once with
src = the lexicographically smaller id.
"""

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np

from dtss import kernels
from dtss.errors import InvalidIntervalError, UnknownEntityError
from dtss.geometry import Zone, assign_zones, validate_zones
from dtss.twin import EntityKind, WorldRegistry, WorldSnapshot


class RelationKind(str, Enum):
    # spatial
    NEAR = "NEAR"
    INSIDE = "INSIDE"
    # temporal
    CO_OCCURRED = "CO_OCCURRED"
    # semantic
    OWNS = "OWNS"
    MEMBER_OF = "MEMBER_OF"
    COMMUNICATED_WITH = "COMMUNICATED_WITH"
    MATCHES_WATCHLIST = "MATCHES_WATCHLIST"


@dataclass
class Relation:
    kind: RelationKind
    src: str
    dst: str
    valid_from: int
    valid_to: Optional[int] = None
    attrs: dict = field(default_factory=dict)

    def valid_at(self, at: int) -> bool:
        if at < self.valid_from:
            return False
        return self.valid_to is None or at < self.valid_to


class RelationGraph:
    def __init__(self, registry: WorldRegistry):
        self.registry = registry
        self._relations: list[Relation] = []

    def assert_relation(self, rel: Relation) -> int:
        """Store a relation; the returned handle allows later retraction."""
        if rel.src == rel.dst:
            raise InvalidIntervalError("relation endpoints must differ")
        if rel.valid_to is not None and rel.valid_to < rel.valid_from:
            raise InvalidIntervalError(
                f"valid_to {rel.valid_to} < valid_from {rel.valid_from}")
        for eid in (rel.src, rel.dst):
            if eid not in self.registry:
                raise UnknownEntityError(f"unknown entity: {eid}")
        self._relations.append(rel)
        return len(self._relations) - 1

    def retract(self, handle: int, valid_to: int) -> None:
        rel = self._relations[handle]
        if valid_to < rel.valid_from:
            raise InvalidIntervalError(
                f"valid_to {valid_to} < valid_from {rel.valid_from}")
        rel.valid_to = valid_to

    def all_relations(self) -> list[Relation]:
        return list(self._relations)

    def query_related(self, entity_id: str, kind: RelationKind,
                      at: int) -> list[Relation]:
        if entity_id not in self.registry:
            raise UnknownEntityError(f"unknown entity: {entity_id}")
        hits = [r for r in self._relations
                if r.kind == kind and r.valid_at(at)
                and (r.src == entity_id or r.dst == entity_id)]
        hits.sort(key=lambda r: (r.valid_from, r.dst))
        return hits

    def proximity_query(self, center: tuple[float, float], radius: float,
                        at: int, kind: Optional[EntityKind] = None
                        ) -> list[tuple[str, float]]:
        """Entities within `radius` of `center` at time `at` (closed ball).

        Uses a uniform grid bucketing at cell = radius to avoid the full
        scan; results are (id, distance) ascending by distance then id.
        """
        if radius <= 0:
            raise InvalidIntervalError(f"radius must be > 0, got {radius}")
        snap = self.registry.snapshot(at)
        cx, cy = float(center[0]), float(center[1])
        grid: dict[tuple[int, int], list] = {}
        for eid, state in snap.entities.items():
            if state.position is None:
                continue
            if kind is not None and self.registry.get(eid).kind != kind:
                continue
            gx = math.floor(state.position[0] / radius)
            gy = math.floor(state.position[1] / radius)
            grid.setdefault((gx, gy), []).append((eid, state.position))
        out = []
        gx0 = math.floor(cx / radius)
        gy0 = math.floor(cy / radius)
        for gx in range(gx0 - 1, gx0 + 2):
            for gy in range(gy0 - 1, gy0 + 2):
                for eid, pos in grid.get((gx, gy), ()):
                    dx = pos[0] - cx
                    dy = pos[1] - cy
                    d = math.sqrt(dx * dx + dy * dy)
                    if d <= radius:
                        out.append((eid, d))
        out.sort(key=lambda t: (t[1], t[0]))
        return out


def derive_spatial_relations(snap: WorldSnapshot, near_radius: float,
                             zones: list[Zone]) -> list[Relation]:
    """NEAR for every positioned pair within radius, INSIDE per zone hit.

    NEAR appears once per unordered pair with src = smaller id and the
    distance recorded in attrs; output order is (src, dst) within each
    relation kind, NEAR block first.
    """
    validate_zones(zones)
    at = snap.at
    ids = sorted(eid for eid, st in snap.entities.items() if st.position is not None)
    xs = np.asarray([snap.entities[i].position[0] for i in ids], dtype=np.float64)
    ys = np.asarray([snap.entities[i].position[1] for i in ids], dtype=np.float64)

    out: list[Relation] = []
    if len(ids) >= 2:
        ii, jj, dd = kernels.pairs_within(xs, ys, float(near_radius))
        pairs = []
        for k in range(len(ii)):
            a, b = ids[int(ii[k])], ids[int(jj[k])]
            src, dst = (a, b) if a < b else (b, a)
            pairs.append((src, dst, float(dd[k])))
        pairs.sort()
        out.extend(Relation(RelationKind.NEAR, src, dst, at,
                            attrs={"distance_m": d})
                   for src, dst, d in pairs)

    if zones:
        hits = assign_zones([(float(xs[k]), float(ys[k])) for k in range(len(ids))],
                            zones)
        inside = sorted((ids[k], zones[z].zone_id)
                        for k, z in enumerate(hits) if z >= 0)
        out.extend(Relation(RelationKind.INSIDE, eid, zid, at)
                   for eid, zid in inside)
    return out
