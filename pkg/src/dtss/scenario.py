"""Scenario specifications: the declarative world + attacker script.

A scenario file is UTF-8 JSON with extension `.scenario.json`; the full
schema is documented in docs/scenario_format.md. Three scenarios ship with
the package (metro_bomb, waterfront_hybrid, cathedral_uav).
"""

import hashlib
import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Optional

from dtss.detectors import DetectorConfig
from dtss.errors import (
    OverlappingZonesError,
    ScenarioParseError,
    ScenarioValidationError,
)
from dtss.fusion import CompositeRule, SpatialMode
from dtss.detectors import AlertKind
from dtss.geometry import Zone, validate_zones
from dtss.ingest import Modality, Watchlist, WatchlistEntry, MOBILE_EVENTS
from dtss.rng import unit_vector
from dtss.twin import EntityKind, WorldBounds, validate_entity_id
from dtss.errors import InvalidStateError

DEFAULT_STEP_MS = 500
MIN_STEP_MS = 100

# Which entity kinds each sensor modality can perceive.
SENSE_KINDS = {
    Modality.CCTV_TRACK: {EntityKind.PERSON_TRACK, EntityKind.OBJECT_TRACK,
                          EntityKind.GROUND_VEHICLE, EntityKind.USV,
                          EntityKind.UAV, EntityKind.OFFICER},
    Modality.LIDAR_RETURN: {EntityKind.PERSON_TRACK, EntityKind.OBJECT_TRACK,
                            EntityKind.GROUND_VEHICLE, EntityKind.UAV,
                            EntityKind.USV, EntityKind.OFFICER},
    Modality.SONAR_CONTACT: {EntityKind.USV, EntityKind.UUV},
    Modality.HYDROPHONE_EVENT: {EntityKind.USV, EntityKind.UUV},
    Modality.RF_DETECTION: {EntityKind.UAV},
    Modality.ACOUSTIC_EVENT: {EntityKind.UAV},
}

ACTOR_KINDS = {EntityKind.PERSON_TRACK, EntityKind.UAV, EntityKind.USV,
               EntityKind.UUV, EntityKind.GROUND_VEHICLE, EntityKind.OFFICER,
               EntityKind.MOBILE_DEVICE, EntityKind.CYBER_SOURCE}

EVENT_ACTOR_KINDS = {EntityKind.MOBILE_DEVICE, EntityKind.CYBER_SOURCE,
                     EntityKind.OFFICER}


@dataclass(frozen=True)
class SensorSpec:
    sensor_id: str
    modality: Modality
    position: tuple[float, float, float]
    coverage_radius_m: float
    p_base: float
    period_ms: int
    occlusion_kappa: float = 0.0


@dataclass(frozen=True)
class CellSite:
    cell_id: str
    position: tuple[float, float, float]


@dataclass(frozen=True)
class CrowdSpec:
    count: int = 0
    speed_mps: float = 1.2


@dataclass(frozen=True)
class ActorScript:
    actor_id: str
    kind: EntityKind
    waypoints: tuple = ()           # ((t_ms, (x, y, z)), ...)
    events: tuple = ()              # ((t_ms, payload dict), ...)
    carries: tuple = ()             # object entity ids
    drop_at: Optional[tuple] = None  # (t_ms, object_id)
    face_feature: Optional[tuple] = None  # resolved 128-vector
    imsi: Optional[str] = None
    attacker: bool = False

    def active_window(self, duration_ms: int) -> tuple[int, int]:
        if self.waypoints:
            return (self.waypoints[0][0], self.waypoints[-1][0])
        return (0, duration_ms)

    def position_at(self, t: int) -> Optional[tuple[float, float, float]]:
        """Linear waypoint interpolation, exact at waypoint times."""
        wps = self.waypoints
        if not wps:
            return None
        if t <= wps[0][0]:
            return wps[0][1]
        if t >= wps[-1][0]:
            return wps[-1][1]
        for (t0, p0), (t1, p1) in zip(wps, wps[1:]):
            if t == t0:
                return p0
            if t0 < t < t1:
                f = (t - t0) / (t1 - t0)
                return (p0[0] + (p1[0] - p0[0]) * f,
                        p0[1] + (p1[1] - p0[1]) * f,
                        p0[2] + (p1[2] - p0[2]) * f)
        return wps[-1][1]


@dataclass(frozen=True)
class AttackSpec:
    target_zone_id: str
    t_exec_ms: int
    attack_class: str = "unspecified"


@dataclass
class ScenarioSpec:
    name: str
    world_bounds: WorldBounds
    duration_ms: int
    zones: list[Zone] = field(default_factory=list)
    sensors: list[SensorSpec] = field(default_factory=list)
    cell_map: list[CellSite] = field(default_factory=list)
    crowd: CrowdSpec = field(default_factory=CrowdSpec)
    actors: list[ActorScript] = field(default_factory=list)
    watchlist: Watchlist = field(default_factory=lambda: Watchlist(entries=[]))
    lexicon: list[tuple[str, float]] = field(default_factory=list)
    detector_cfg: DetectorConfig = field(default_factory=DetectorConfig)
    rules: list[CompositeRule] = field(default_factory=list)
    attack: Optional[AttackSpec] = None
    phys_start_ms: int = 0
    eval_period_ms: int = 5_000
    near_radius_m: float = 5.0
    prediction_threshold: float = 1.0
    prediction_half_life_ms: int = 3_600_000

    def step_ms(self) -> int:
        periods = [s.period_ms for s in self.sensors]
        if not periods:
            return DEFAULT_STEP_MS
        step = periods[0]
        for p in periods[1:]:
            step = math.gcd(step, p)
        return max(step, MIN_STEP_MS)

    def zone_by_id(self, zone_id: str) -> Zone:
        for z in self.zones:
            if z.zone_id == zone_id:
                return z
        raise ScenarioValidationError(f"unknown zone: {zone_id}")

    def canonical_dict(self) -> dict:
        return scenario_to_dict(self)

    def spec_hash(self) -> str:
        blob = json.dumps(self.canonical_dict(), sort_keys=True,
                          separators=(",", ":"), ensure_ascii=False)
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def _need(obj: dict, key: str, where: str):
    if key not in obj:
        raise ScenarioParseError(f"{where}: missing required key {key!r}")
    return obj[key]


def _pos3(value, where: str) -> tuple[float, float, float]:
    if not isinstance(value, (list, tuple)) or len(value) != 3:
        raise ScenarioParseError(f"{where}: position must be [x,y,z]")
    try:
        return (float(value[0]), float(value[1]), float(value[2]))
    except (TypeError, ValueError):
        raise ScenarioParseError(f"{where}: non-numeric position") from None


def _feature(value, where: str) -> tuple[float, ...]:
    """A feature is either an explicit 128-vector or a label expanded to a
    deterministic unit vector."""
    if isinstance(value, str):
        return tuple(unit_vector(value))
    if isinstance(value, (list, tuple)):
        return tuple(float(v) for v in value)
    raise ScenarioParseError(f"{where}: feature must be a label or a 128-vector")


def _parse_rule(obj: dict) -> CompositeRule:
    rule_id = _need(obj, "rule_id", "rule")
    kinds = _need(obj, "required_kinds", f"rule {rule_id}")
    try:
        required = frozenset(AlertKind(k) for k in kinds)
    except ValueError as exc:
        raise ScenarioParseError(f"rule {rule_id}: {exc}") from None
    spatial_raw = obj.get("spatial", "ANY")
    within = 0.0
    if isinstance(spatial_raw, dict):
        spatial = SpatialMode.WITHIN
        within = float(_need(spatial_raw, "within_m", f"rule {rule_id} spatial"))
    else:
        try:
            spatial = SpatialMode(spatial_raw)
        except ValueError:
            raise ScenarioParseError(
                f"rule {rule_id}: bad spatial constraint {spatial_raw!r}") from None
    try:
        return CompositeRule(
            rule_id=rule_id, required_kinds=required,
            window_ms=int(_need(obj, "window_ms", f"rule {rule_id}")),
            spatial=spatial, within_m=within,
            min_severity=float(obj.get("min_severity", 0.0)))
    except ValueError as exc:
        raise ScenarioParseError(f"rule {rule_id}: {exc}") from None


def parse_scenario(doc: dict, base_dir: Optional[Path] = None) -> ScenarioSpec:
    if not isinstance(doc, dict):
        raise ScenarioParseError("scenario document must be a JSON object")
    name = _need(doc, "name", "scenario")
    wb = _need(doc, "world_bounds", "scenario")
    bounds = WorldBounds(float(_need(wb, "x_min", "world_bounds")),
                         float(_need(wb, "y_min", "world_bounds")),
                         float(_need(wb, "x_max", "world_bounds")),
                         float(_need(wb, "y_max", "world_bounds")))
    duration = int(_need(doc, "duration_ms", "scenario"))

    zones = []
    for zobj in doc.get("zones", []):
        zid = _need(zobj, "zone_id", "zone")
        poly = [(float(p[0]), float(p[1]))
                for p in _need(zobj, "polygon", f"zone {zid}")]
        zones.append(Zone(zone_id=zid, polygon=poly,
                          tags=list(zobj.get("tags", []))))

    sensors = []
    for sobj in doc.get("sensors", []):
        sid = _need(sobj, "sensor_id", "sensor")
        try:
            modality = Modality(_need(sobj, "modality", f"sensor {sid}"))
        except ValueError as exc:
            raise ScenarioParseError(f"sensor {sid}: {exc}") from None
        sensors.append(SensorSpec(
            sensor_id=sid, modality=modality,
            position=_pos3(_need(sobj, "position", f"sensor {sid}"), f"sensor {sid}"),
            coverage_radius_m=float(_need(sobj, "coverage_radius_m", f"sensor {sid}")),
            p_base=float(_need(sobj, "p_base", f"sensor {sid}")),
            period_ms=int(_need(sobj, "period_ms", f"sensor {sid}")),
            occlusion_kappa=float(sobj.get("occlusion_kappa", 0.0))))

    cell_map = [CellSite(cell_id=_need(c, "cell_id", "cell_map"),
                         position=_pos3(_need(c, "position", "cell_map"), "cell_map"))
                for c in doc.get("cell_map", [])]

    crowd_obj = doc.get("crowd", {})
    crowd = CrowdSpec(count=int(crowd_obj.get("count", 0)),
                      speed_mps=float(crowd_obj.get("speed_mps", 1.2)))

    actors = []
    for aobj in doc.get("actors", []):
        aid = _need(aobj, "actor_id", "actor")
        try:
            kind = EntityKind(_need(aobj, "kind", f"actor {aid}"))
        except ValueError as exc:
            raise ScenarioParseError(f"actor {aid}: {exc}") from None
        waypoints = tuple(
            (int(w[0]), _pos3(w[1], f"actor {aid} waypoint"))
            for w in aobj.get("waypoints", []))
        events = tuple((int(e[0]), dict(e[1])) for e in aobj.get("events", []))
        drop_at = None
        if aobj.get("drop_at") is not None:
            d = aobj["drop_at"]
            drop_at = (int(d[0]), str(d[1]))
        face = None
        if aobj.get("face_feature") is not None:
            face = _feature(aobj["face_feature"], f"actor {aid}")
        actors.append(ActorScript(
            actor_id=aid, kind=kind, waypoints=waypoints, events=events,
            carries=tuple(aobj.get("carries", [])), drop_at=drop_at,
            face_feature=face, imsi=aobj.get("imsi"),
            attacker=bool(aobj.get("attacker", False))))

    entries = []
    for wobj in doc.get("watchlist", []):
        sid = _need(wobj, "suspect_id", "watchlist")
        entries.append(WatchlistEntry(
            suspect_id=sid,
            feature=_feature(_need(wobj, "feature", f"watchlist {sid}"),
                             f"watchlist {sid}"),
            label=wobj.get("label", "")))

    lexicon: list[tuple[str, float]] = []
    if "lexicon" in doc:
        lexicon = [(str(t), float(w)) for t, w in doc["lexicon"]]
    elif "lexicon_ref" in doc:
        lexicon = _load_lexicon_ref(doc["lexicon_ref"], base_dir)

    try:
        detector_cfg = DetectorConfig().with_overrides(doc.get("detector_cfg", {}))
    except ValueError as exc:
        raise ScenarioParseError(str(exc)) from None

    rules = [_parse_rule(r) for r in doc.get("rules", [])]

    attack = None
    if "attack" in doc:
        aobj = doc["attack"]
        attack = AttackSpec(
            target_zone_id=_need(aobj, "target_zone_id", "attack"),
            t_exec_ms=int(_need(aobj, "t_exec_ms", "attack")),
            attack_class=aobj.get("class", "unspecified"))

    spec = ScenarioSpec(
        name=name, world_bounds=bounds, duration_ms=duration, zones=zones,
        sensors=sensors, cell_map=cell_map, crowd=crowd, actors=actors,
        watchlist=Watchlist(entries=entries), lexicon=lexicon,
        detector_cfg=detector_cfg, rules=rules, attack=attack,
        phys_start_ms=int(doc.get("phys_start_ms", 0)),
        eval_period_ms=int(doc.get("eval_period_ms", 5_000)),
        near_radius_m=float(doc.get("near_radius_m", 5.0)),
        prediction_threshold=float(doc.get("prediction_threshold", 1.0)),
        prediction_half_life_ms=int(doc.get("prediction_half_life_ms", 3_600_000)),
    )
    validate_scenario(spec)
    return spec


def _load_lexicon_ref(ref: str, base_dir: Optional[Path]):
    from dtss.detectors import load_lexicon
    if ref.startswith("bundled:"):
        name = ref.split(":", 1)[1]
        res = resources.files("dtss").joinpath(f"lexicons/{name}.csv")
        with resources.as_file(res) as path:
            return load_lexicon(path)
    path = Path(ref)
    if not path.is_absolute() and base_dir is not None:
        path = base_dir / path
    return load_lexicon(path)


def validate_scenario(spec: ScenarioSpec) -> None:
    if spec.duration_ms <= 0:
        raise ScenarioValidationError("duration_ms must be > 0")
    if not (0 <= spec.phys_start_ms <= spec.duration_ms):
        raise ScenarioValidationError(
            f"phys_start_ms {spec.phys_start_ms} outside [0, duration]")
    if spec.eval_period_ms <= 0:
        raise ScenarioValidationError("eval_period_ms must be > 0")
    try:
        validate_zones(spec.zones)
    except OverlappingZonesError as exc:
        raise ScenarioValidationError(str(exc)) from None

    zone_ids = {z.zone_id for z in spec.zones}
    seen_ids: set[str] = set()

    def claim(entity_id: str, what: str) -> None:
        try:
            validate_entity_id(entity_id)
        except InvalidStateError as exc:
            raise ScenarioValidationError(f"{what}: {exc}") from None
        if entity_id in seen_ids:
            raise ScenarioValidationError(f"{what}: duplicate id {entity_id}")
        seen_ids.add(entity_id)

    for s in spec.sensors:
        claim(s.sensor_id, "sensor")
        if not 0.0 <= s.p_base <= 1.0:
            raise ScenarioValidationError(
                f"sensor {s.sensor_id}: p_base {s.p_base} outside [0,1]")
        if s.occlusion_kappa < 0:
            raise ScenarioValidationError(
                f"sensor {s.sensor_id}: occlusion_kappa must be >= 0")
        if s.period_ms <= 0:
            raise ScenarioValidationError(
                f"sensor {s.sensor_id}: period_ms must be > 0")
        if s.coverage_radius_m <= 0:
            raise ScenarioValidationError(
                f"sensor {s.sensor_id}: coverage_radius_m must be > 0")
        if s.modality not in SENSE_KINDS:
            raise ScenarioValidationError(
                f"sensor {s.sensor_id}: {s.modality.value} is not a sampling modality")
        if not spec.world_bounds.contains(s.position[0], s.position[1]):
            raise ScenarioValidationError(
                f"sensor {s.sensor_id}: position outside world bounds")

    cell_ids = set()
    for c in spec.cell_map:
        if c.cell_id in cell_ids:
            raise ScenarioValidationError(f"duplicate cell id: {c.cell_id}")
        cell_ids.add(c.cell_id)

    carried: set[str] = set()
    for a in spec.actors:
        claim(a.actor_id, "actor")
        if a.kind not in ACTOR_KINDS:
            raise ScenarioValidationError(
                f"actor {a.actor_id}: kind {a.kind.value} cannot be scripted")
        if a.waypoints and a.kind in (EntityKind.MOBILE_DEVICE, EntityKind.CYBER_SOURCE):
            raise ScenarioValidationError(
                f"actor {a.actor_id}: {a.kind.value} actors use events, not waypoints")
        last_t = None
        for t, pos in a.waypoints:
            if last_t is not None and t <= last_t:
                raise ScenarioValidationError(
                    f"actor {a.actor_id}: waypoint times must strictly increase")
            last_t = t
            if t < 0 or t > spec.duration_ms:
                raise ScenarioValidationError(
                    f"actor {a.actor_id}: waypoint t={t} outside [0, duration]")
        last_t = None
        for t, payload in a.events:
            if last_t is not None and t < last_t:
                raise ScenarioValidationError(
                    f"actor {a.actor_id}: event times must not decrease")
            last_t = t
            if t < 0 or t > spec.duration_ms:
                raise ScenarioValidationError(
                    f"actor {a.actor_id}: event t={t} outside [0, duration]")
            if a.kind is EntityKind.MOBILE_DEVICE:
                cell = payload.get("cell_id")
                if cell not in cell_ids:
                    raise ScenarioValidationError(
                        f"actor {a.actor_id}: event references unknown cell {cell!r}")
                if payload.get("event") not in MOBILE_EVENTS:
                    raise ScenarioValidationError(
                        f"actor {a.actor_id}: bad mobile event {payload.get('event')!r}")
            if a.kind is EntityKind.CYBER_SOURCE and "text" not in payload:
                raise ScenarioValidationError(
                    f"actor {a.actor_id}: cyber event needs a text payload")
        if a.events and a.kind not in EVENT_ACTOR_KINDS:
            raise ScenarioValidationError(
                f"actor {a.actor_id}: {a.kind.value} actors cannot carry events")
        if a.carries and not a.waypoints:
            raise ScenarioValidationError(
                f"actor {a.actor_id}: carrying objects requires waypoints")
        for obj_id in a.carries:
            claim(obj_id, f"actor {a.actor_id} carried object")
            carried.add(obj_id)
        if a.drop_at is not None:
            t_drop, obj_id = a.drop_at
            if obj_id not in a.carries:
                raise ScenarioValidationError(
                    f"actor {a.actor_id}: drop_at references uncarried object {obj_id}")
            if not 0 <= t_drop <= spec.duration_ms:
                raise ScenarioValidationError(
                    f"actor {a.actor_id}: drop_at t={t_drop} outside [0, duration]")
            if not a.waypoints:
                raise ScenarioValidationError(
                    f"actor {a.actor_id}: drop_at requires waypoints")
        if a.face_feature is not None and len(a.face_feature) != 128:
            raise ScenarioValidationError(
                f"actor {a.actor_id}: face feature must have 128 components")

    if spec.attack is not None:
        if spec.attack.target_zone_id not in zone_ids:
            raise ScenarioValidationError(
                f"attack references unknown zone {spec.attack.target_zone_id!r}")
        if spec.attack.t_exec_ms > spec.duration_ms:
            raise ScenarioValidationError(
                f"attack t_exec {spec.attack.t_exec_ms} exceeds duration")
    if spec.crowd.count < 0:
        raise ScenarioValidationError("crowd count must be >= 0")
    if spec.crowd.count > 0 and spec.crowd.speed_mps <= 0:
        raise ScenarioValidationError("crowd speed must be > 0")


def scenario_to_dict(spec: ScenarioSpec) -> dict:
    doc = {
        "name": spec.name,
        "world_bounds": {"x_min": spec.world_bounds.x_min,
                         "y_min": spec.world_bounds.y_min,
                         "x_max": spec.world_bounds.x_max,
                         "y_max": spec.world_bounds.y_max},
        "duration_ms": spec.duration_ms,
        "phys_start_ms": spec.phys_start_ms,
        "eval_period_ms": spec.eval_period_ms,
        "near_radius_m": spec.near_radius_m,
        "prediction_threshold": spec.prediction_threshold,
        "prediction_half_life_ms": spec.prediction_half_life_ms,
        "zones": [{"zone_id": z.zone_id,
                   "polygon": [[x, y] for x, y in z.polygon],
                   "tags": list(z.tags)} for z in spec.zones],
        "sensors": [{"sensor_id": s.sensor_id, "modality": s.modality.value,
                     "position": list(s.position),
                     "coverage_radius_m": s.coverage_radius_m,
                     "p_base": s.p_base, "period_ms": s.period_ms,
                     "occlusion_kappa": s.occlusion_kappa}
                    for s in spec.sensors],
        "cell_map": [{"cell_id": c.cell_id, "position": list(c.position)}
                     for c in spec.cell_map],
        "crowd": {"count": spec.crowd.count, "speed_mps": spec.crowd.speed_mps},
        "actors": [],
        "watchlist": [{"suspect_id": e.suspect_id, "feature": list(e.feature),
                       "label": e.label} for e in spec.watchlist.entries],
        "lexicon": [[t, w] for t, w in spec.lexicon],
        "detector_cfg": {
            k: getattr(spec.detector_cfg, k)
            for k in sorted(vars(spec.detector_cfg))
        },
        "rules": [{"rule_id": r.rule_id,
                   "required_kinds": sorted(k.value for k in r.required_kinds),
                   "window_ms": r.window_ms,
                   "spatial": ({"within_m": r.within_m}
                               if r.spatial == SpatialMode.WITHIN else r.spatial.value),
                   "min_severity": r.min_severity} for r in spec.rules],
    }
    for a in spec.actors:
        aobj = {"actor_id": a.actor_id, "kind": a.kind.value,
                "waypoints": [[t, list(p)] for t, p in a.waypoints],
                "events": [[t, payload] for t, payload in a.events],
                "carries": list(a.carries),
                "attacker": a.attacker}
        if a.drop_at is not None:
            aobj["drop_at"] = [a.drop_at[0], a.drop_at[1]]
        if a.face_feature is not None:
            aobj["face_feature"] = list(a.face_feature)
        if a.imsi is not None:
            aobj["imsi"] = a.imsi
        doc["actors"].append(aobj)
    if spec.attack is not None:
        doc["attack"] = {"target_zone_id": spec.attack.target_zone_id,
                         "t_exec_ms": spec.attack.t_exec_ms,
                         "class": spec.attack.attack_class}
    return doc


def load_scenario(path) -> ScenarioSpec:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ScenarioParseError(f"cannot read scenario {path}: {exc}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioParseError(f"{path}: invalid JSON: {exc}") from None
    return parse_scenario(doc, base_dir=path.parent)


def bundled_scenario_path(name: str) -> Path:
    res = resources.files("dtss").joinpath(f"scenarios/{name}.scenario.json")
    with resources.as_file(res) as path:
        if not path.exists():
            raise ScenarioParseError(f"no bundled scenario named {name!r}")
        return Path(path)


def load_bundled(name: str) -> ScenarioSpec:
    return load_scenario(bundled_scenario_path(name))
