"""Multi-entity services: area picture fusion, composite event rules,
attack prediction, and shareable report export."""

import copy
import json
import math
from dataclasses import dataclass, field
from enum import Enum
from itertools import product
from typing import Optional

from dtss.detectors import Alert, AlertKind
from dtss.errors import TimeRegressionError, UnorderedAlertsError
from dtss.geometry import Zone, assign_zones, validate_zones
from dtss.twin import EntityKind, WorldSnapshot

INDICATOR_KINDS = {
    AlertKind.CYBER_INDICATOR,
    AlertKind.MOBILE_RECON,
    AlertKind.WATCHLIST_MATCH,
    AlertKind.SUSPICIOUS_UXV,
}

DEFAULT_HALF_LIFE_MS = 3_600_000  # one hour


@dataclass(frozen=True)
class ZonePicture:
    entity_count: int
    person_count: int
    density_per_m2: float
    active_alert_ids: tuple[str, ...]


@dataclass(frozen=True)
class AreaPicture:
    at: int
    per_zone: dict  # zone_id -> ZonePicture
    unassigned_count: int


def fuse_area_picture(snap: WorldSnapshot, zones: list[Zone],
                      active_alerts: list[Alert],
                      kinds: Optional[dict[str, EntityKind]] = None) -> AreaPicture:
    """Current per-zone intelligence picture from one world snapshot.

    Every positioned entity lands in the zone containing it (boundary
    counts as inside) or in the unassigned bucket; person density uses
    PersonTrack counts over polygon area. An alert attaches to a zone when
    any of its entities sits in that zone.
    """
    validate_zones(zones)
    kinds = kinds or {}
    ids = sorted(eid for eid, st in snap.entities.items() if st.position is not None)
    points = [(snap.entities[i].position[0], snap.entities[i].position[1])
              for i in ids]
    hits = assign_zones(points, zones)

    zone_of: dict[str, str] = {}
    entity_counts = {z.zone_id: 0 for z in zones}
    person_counts = {z.zone_id: 0 for z in zones}
    unassigned = 0
    for eid, z_idx in zip(ids, hits):
        if z_idx < 0:
            unassigned += 1
            continue
        zid = zones[z_idx].zone_id
        zone_of[eid] = zid
        entity_counts[zid] += 1
        if kinds.get(eid) == EntityKind.PERSON_TRACK:
            person_counts[zid] += 1

    alerts_by_zone: dict[str, list[str]] = {z.zone_id: [] for z in zones}
    for alert in active_alerts:
        touched = sorted({zone_of[eid] for eid in alert.entity_ids if eid in zone_of})
        for zid in touched:
            alerts_by_zone[zid].append(alert.alert_id)

    per_zone = {}
    for z in zones:
        area = z.area()
        per_zone[z.zone_id] = ZonePicture(
            entity_count=entity_counts[z.zone_id],
            person_count=person_counts[z.zone_id],
            density_per_m2=person_counts[z.zone_id] / area if area > 0 else 0.0,
            active_alert_ids=tuple(sorted(alerts_by_zone[z.zone_id])),
        )
    return AreaPicture(at=snap.at, per_zone=per_zone, unassigned_count=unassigned)


class SpatialMode(str, Enum):
    ANY = "ANY"
    SAME_ZONE = "SAME_ZONE"
    WITHIN = "WITHIN"


@dataclass(frozen=True)
class CompositeRule:
    rule_id: str
    required_kinds: frozenset
    window_ms: int
    spatial: SpatialMode = SpatialMode.ANY
    within_m: float = 0.0
    min_severity: float = 0.0

    def __post_init__(self):
        if not self.required_kinds:
            raise ValueError("rule needs at least one required alert kind")
        if self.window_ms <= 0:
            raise ValueError(f"window_ms must be > 0, got {self.window_ms}")
        if not 0.0 <= self.min_severity <= 1.0:
            raise ValueError(f"min_severity outside [0,1]: {self.min_severity}")


@dataclass(frozen=True)
class CompositeEvent:
    event_id: str
    rule_id: str
    member_alert_ids: tuple[str, ...]
    t_trigger: int
    zone_id: Optional[str] = None


def _combo_satisfies_spatial(rule: CompositeRule, alerts: list[Alert]) -> bool:
    if rule.spatial == SpatialMode.ANY:
        return True
    if rule.spatial == SpatialMode.SAME_ZONE:
        zones = {a.evidence.get("zone_id") for a in alerts}
        return len(zones) == 1 and None not in zones
    positions = []
    for a in alerts:
        x = a.evidence.get("x")
        y = a.evidence.get("y")
        if x is None or y is None:
            return False
        positions.append((float(x), float(y)))
    for i in range(len(positions)):
        for j in range(i + 1, len(positions)):
            dx = positions[i][0] - positions[j][0]
            dy = positions[i][1] - positions[j][1]
            if math.sqrt(dx * dx + dy * dy) > rule.within_m:
                return False
    return True


class CompositeRuleEngine:
    """Incremental composite-event evaluation with alert consumption.

    An event triggers at the arrival (t_end order) of the alert that first
    completes a rule: every required kind has an unconsumed alert with
    t_end in (t - window_ms, t], severity >= min_severity, and the chosen
    combination satisfies the spatial constraint. Candidates are taken
    most-recent-first per kind (ties: smaller alert_id); each alert fires
    a given rule at most once.
    """

    def __init__(self, rules: list[CompositeRule]):
        self.rules = list(rules)
        self._pools: dict[str, list[Alert]] = {r.rule_id: [] for r in self.rules}
        self._consumed: dict[str, set] = {r.rule_id: set() for r in self.rules}
        self._event_count = 0
        self._last_t: Optional[int] = None
        self.events: list[CompositeEvent] = []

    def add_alert(self, alert: Alert) -> list[CompositeEvent]:
        if self._last_t is not None and alert.t_end < self._last_t:
            raise UnorderedAlertsError(
                f"alert stream must be ordered by t_end "
                f"({self._last_t} -> {alert.t_end})")
        self._last_t = alert.t_end
        fired = []
        for rule in self.rules:
            if alert.kind not in rule.required_kinds:
                continue
            if alert.severity < rule.min_severity:
                continue
            pool = self._pools[rule.rule_id]
            pool.append(alert)
            event = self._try_fire(rule, alert.t_end)
            if event is not None:
                fired.append(event)
        return fired

    def _try_fire(self, rule: CompositeRule, now: int) -> Optional[CompositeEvent]:
        pool = self._pools[rule.rule_id]
        consumed = self._consumed[rule.rule_id]
        lo = now - rule.window_ms
        candidates: dict = {}
        for kind in sorted(rule.required_kinds, key=lambda k: k.value):
            ok = [a for a in pool
                  if a.kind == kind and a.alert_id not in consumed
                  and lo < a.t_end <= now]
            if not ok:
                return None
            ok.sort(key=lambda a: (-a.t_end, a.alert_id))
            candidates[kind] = ok
        kinds = sorted(rule.required_kinds, key=lambda k: k.value)
        for combo in product(*(candidates[k] for k in kinds)):
            if _combo_satisfies_spatial(rule, list(combo)):
                members = tuple(sorted(a.alert_id for a in combo))
                for a in combo:
                    consumed.add(a.alert_id)
                zone = None
                if rule.spatial == SpatialMode.SAME_ZONE:
                    zone = combo[0].evidence.get("zone_id")
                self._event_count += 1
                event = CompositeEvent(
                    event_id=f"ce-{rule.rule_id}-{self._event_count}",
                    rule_id=rule.rule_id,
                    member_alert_ids=members,
                    t_trigger=now,
                    zone_id=zone,
                )
                self.events.append(event)
                return event
        return None


def evaluate_composite_rules(alerts: list[Alert],
                             rules: list[CompositeRule]) -> list[CompositeEvent]:
    """Run the incremental engine over a complete time-ordered stream."""
    engine = CompositeRuleEngine(rules)
    for alert in alerts:
        engine.add_alert(alert)
    return engine.events


@dataclass
class PredictionState:
    """Decaying attack-precursor score: sum of w_i * exp(-lambda (t - t_i))."""
    lambda_per_ms: float = math.log(2.0) / DEFAULT_HALF_LIFE_MS
    threshold: float = 1.0
    contributions: list = field(default_factory=list)  # (alert_id, weight, t_arrival)
    score: float = 0.0
    last_t: int = 0
    armed: bool = True

    def score_at(self, t: int) -> float:
        return sum(w * math.exp(-self.lambda_per_ms * (t - t_i))
                   for _, w, t_i in self.contributions)


def update_attack_prediction(state: PredictionState, indicator: Alert,
                             now: int) -> tuple[PredictionState, bool]:
    """Fold one indicator alert into the prediction state.

    Non-indicator kinds pass through untouched. Returns the updated state
    and whether an ALARM fired (score crossed the threshold from below;
    one alarm per upward crossing, re-armed once the score decays back
    under the threshold).
    """
    if now < state.last_t:
        raise TimeRegressionError(f"time went backwards: {state.last_t} -> {now}")
    if indicator.kind not in INDICATOR_KINDS:
        return state, False
    pre = state.score_at(now)
    if pre < state.threshold:
        state.armed = True
    state.contributions.append((indicator.alert_id, indicator.severity, now))
    state.score = pre + indicator.severity
    state.last_t = now
    alarm = state.armed and state.score >= state.threshold
    if alarm:
        state.armed = False
    return state, alarm


class Audience(str, Enum):
    LOCAL = "LOCAL"
    NATIONAL = "NATIONAL"
    INTERNATIONAL = "INTERNATIONAL"


def _mask_imsi(value: str) -> str:
    tail = value[-4:] if len(value) >= 4 else value
    return f"***{tail}"


def export_report(events: list, alerts: list[Alert], audience: Audience,
                  assessment: Optional[dict] = None,
                  officer_reports: Optional[list[dict]] = None,
                  run_id: str = "") -> dict:
    """Deterministic shareable report with audience-based redaction.

    NATIONAL masks mobile subscriber ids to their last 4 digits;
    INTERNATIONAL additionally drops watchlist similarity scores and
    officer free-text.
    """
    alert_docs = []
    for a in alerts:
        doc = {
            "alert_id": a.alert_id,
            "kind": a.kind.value,
            "severity": a.severity,
            "entity_ids": list(a.entity_ids),
            "t_start": a.t_start,
            "t_end": a.t_end,
            "evidence": copy.deepcopy(a.evidence),
        }
        ev = doc["evidence"]
        if audience in (Audience.NATIONAL, Audience.INTERNATIONAL):
            if "imsi" in ev:
                ev["imsi"] = _mask_imsi(str(ev["imsi"]))
        if audience is Audience.INTERNATIONAL and a.kind is AlertKind.WATCHLIST_MATCH:
            ev.pop("similarity", None)
        alert_docs.append(doc)

    event_docs = [{
        "event_id": e.event_id,
        "rule_id": e.rule_id,
        "member_alert_ids": list(e.member_alert_ids),
        "t_trigger": e.t_trigger,
        "zone_id": e.zone_id,
    } for e in events]

    report = {
        "generated_for": audience.value,
        "run_id": run_id,
        "events": event_docs,
        "alerts": alert_docs,
    }
    if assessment is not None:
        report["assessment"] = assessment
    if officer_reports is not None:
        docs = []
        for o in officer_reports:
            doc = dict(o)
            if audience is Audience.INTERNATIONAL:
                doc.pop("text", None)
            docs.append(doc)
        report["officer_reports"] = docs
    return report


def report_to_json(report: dict) -> str:
    return json.dumps(report, sort_keys=True, separators=(",", ":"),
                      ensure_ascii=False)


def render_report_text(report: dict) -> str:
    """Plain-text rendering of an exported report."""
    lines = [
        f"SECURITY REPORT (audience: {report['generated_for']})",
        f"run: {report['run_id'] or '-'}",
        "",
        f"composite events: {len(report['events'])}",
    ]
    for e in report["events"]:
        zone = f" zone={e['zone_id']}" if e.get("zone_id") else ""
        lines.append(f"  [{e['t_trigger']} ms] {e['rule_id']}{zone} "
                     f"members={','.join(e['member_alert_ids'])}")
    lines.append(f"alerts: {len(report['alerts'])}")
    for a in report["alerts"]:
        lines.append(f"  [{a['t_start']}-{a['t_end']} ms] {a['kind']} "
                     f"sev={a['severity']:.2f} entities={','.join(a['entity_ids'])}")
    if "officer_reports" in report:
        lines.append(f"officer reports: {len(report['officer_reports'])}")
        for o in report["officer_reports"]:
            text = o.get("text", "[redacted]")
            lines.append(f"  [{o.get('timestamp_ms', '?')} ms] {text}")
    if "assessment" in report:
        lines.append("assessment:")
        for key, val in sorted(report["assessment"].items()):
            lines.append(f"  {key}: {val}")
    lines.append("")
    return "\n".join(lines)
