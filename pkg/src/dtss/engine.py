"""Deterministic scenario execution.

One run is a fixed-step loop (step = gcd of sensor periods, floor 100 ms)
over the physical window: advance scripted actors along interpolated
waypoints, walk the crowd, sample every due sensor, and route the records
through ingest -> twin -> analytics. Scripted mobile/cyber/officer events
(including day-granular pre-roll before the physical window) are injected
at their own timestamps. Composite rules and attack prediction run over
the completed, time-ordered alert stream.

All randomness is counter-based and keyed (seed, stream kind, element), so
a record emitted for one (sensor, target) pair depends only on the seed,
the pair, and the step index: adding sensors or actors never perturbs
other streams.
"""

import json
import math
import uuid
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from dtss import kernels
from dtss.analytics import AnalyticsPipeline
from dtss.detectors import Alert, AlertKind
from dtss.errors import ScenarioValidationError
from dtss.fusion import (
    INDICATOR_KINDS,
    CompositeEvent,
    PredictionState,
    evaluate_composite_rules,
    update_attack_prediction,
)
from dtss.ingest import Modality, ObservationRecord, Router, serialize_observation
from dtss.relations import Relation, RelationGraph, RelationKind
from dtss.rng import stream_key
from dtss.scenario import SENSE_KINDS, ScenarioSpec, SensorSpec
from dtss.twin import EntityKind, EntityState, WorldRegistry

POSITION_NOISE_SIGMA_M = 0.5
FACE_RANGE_FACTOR = 0.5  # FaceCapture only within coverage_radius / 2
MOBILE_SOURCE_ID = "mobile-net"
OFFICER_SOURCE_ID = "officer-desk"
RUN_NS = uuid.uuid5(uuid.NAMESPACE_URL, "dtss-run")


@dataclass(frozen=True)
class RunOutcome:
    detected_before_exec: bool
    t_exec_ms: Optional[int] = None
    t_first_composite: Optional[int] = None
    t_first_detection_ms: Optional[int] = None
    lead_time_ms: Optional[int] = None


@dataclass
class RunTrace:
    run_id: str
    scenario: str
    spec_hash: str
    seed: int
    duration_ms: int
    phys_start_ms: int
    world_meta: dict
    observations: list[ObservationRecord] = field(default_factory=list)
    alerts: list[Alert] = field(default_factory=list)
    composite_events: list[CompositeEvent] = field(default_factory=list)
    prediction_timeline: list[dict] = field(default_factory=list)
    recommended_actions: list[dict] = field(default_factory=list)
    outcome: Optional[RunOutcome] = None


def run_id_for(spec_hash: str, seed: int) -> str:
    return str(uuid.uuid5(RUN_NS, f"{spec_hash}:{seed}"))


def _dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def trace_to_lines(trace: RunTrace) -> list[str]:
    """Serialize a trace to its canonical newline-delimited form."""
    meta = {
        "type": "meta",
        "run_id": trace.run_id,
        "scenario": trace.scenario,
        "spec_hash": trace.spec_hash,
        "seed": trace.seed,
        "duration_ms": trace.duration_ms,
        "phys_start_ms": trace.phys_start_ms,
        "world": trace.world_meta,
    }
    entries = []
    for rec in trace.observations:
        obj = json.loads(serialize_observation(rec))
        obj["type"] = "observation"
        entries.append((rec.timestamp_ms, obj))
    for a in trace.alerts:
        entries.append((a.t_end, {
            "type": "alert", "alert_id": a.alert_id, "kind": a.kind.value,
            "severity": a.severity, "entity_ids": list(a.entity_ids),
            "t_start": a.t_start, "t_end": a.t_end, "evidence": a.evidence}))
    for e in trace.composite_events:
        entries.append((e.t_trigger, {
            "type": "composite", "event_id": e.event_id, "rule_id": e.rule_id,
            "member_alert_ids": list(e.member_alert_ids),
            "t_trigger": e.t_trigger, "zone_id": e.zone_id}))
    for p in trace.prediction_timeline:
        entries.append((p["t"], {"type": "prediction", **p}))
    for act in trace.recommended_actions:
        entries.append((act["t"], {"type": "action", **act}))
    entries.sort(key=lambda pair: pair[0])
    lines = [_dumps(meta)]
    lines.extend(_dumps(obj) for _, obj in entries)
    out = trace.outcome
    if out is not None:
        lines.append(_dumps({
            "type": "outcome",
            "detected_before_exec": out.detected_before_exec,
            "t_exec_ms": out.t_exec_ms,
            "t_first_composite": out.t_first_composite,
            "t_first_detection_ms": out.t_first_detection_ms,
            "lead_time_ms": out.lead_time_ms,
            "n_observations": len(trace.observations),
            "n_alerts": len(trace.alerts),
            "n_composite_events": len(trace.composite_events),
        }))
    return lines


def trace_to_bytes(trace: RunTrace) -> bytes:
    return ("\n".join(trace_to_lines(trace)) + "\n").encode("utf-8")


def _clamp(v: float, lo: float, hi: float) -> float:
    return lo if v < lo else (hi if v > hi else v)


def _track_payload(sensor: SensorSpec, kind: EntityKind,
                   noisy: tuple[float, float, float]) -> dict:
    dx = noisy[0] - sensor.position[0]
    dy = noisy[1] - sensor.position[1]
    dist = math.sqrt(dx * dx + dy * dy)
    m = sensor.modality
    if m is Modality.CCTV_TRACK:
        conf = _clamp(1.0 - dist / sensor.coverage_radius_m, 0.01, 0.999)
        return {"kind": kind.value, "conf": round(conf, 4)}
    if m is Modality.SONAR_CONTACT:
        bearing = math.degrees(math.atan2(dy, dx))
        return {"kind": kind.value, "range_m": round(dist, 2),
                "bearing_deg": round(bearing, 2)}
    if m is Modality.LIDAR_RETURN:
        return {"kind": kind.value, "range_m": round(dist, 2)}
    if m is Modality.RF_DETECTION:
        rssi = -40.0 - 20.0 * math.log10(max(dist, 1.0))
        return {"kind": kind.value, "freq_mhz": 2437.0, "rssi_dbm": round(rssi, 1)}
    if m is Modality.ACOUSTIC_EVENT:
        db = 70.0 - 20.0 * math.log10(max(dist, 1.0))
        return {"kind": kind.value, "db": round(db, 1)}
    if m is Modality.HYDROPHONE_EVENT:
        db = 60.0 - 20.0 * math.log10(max(dist, 1.0))
        depth = round(-noisy[2], 2) if noisy[2] < 0 else 0.0
        return {"kind": kind.value, "db": round(db, 1), "depth_m": depth}
    raise ScenarioValidationError(f"{m.value} is not a sampling modality")


def sensor_sample(sensor: SensorSpec, subject_id: str, kind: EntityKind,
                  position: tuple[float, float, float],
                  face_feature, crowd_density: float, seed: int,
                  t: int, seq: int,
                  bounds=None) -> list[ObservationRecord]:
    """Sample one target with one sensor for one step.

    Emits nothing outside coverage; otherwise emits with probability
    p_base * max(0, 1 - occlusion_kappa * density) and isotropic Gaussian
    position noise (sigma 0.5 m) from the pair's own counter-based
    stream. CCTV sensors add a FaceCapture when the subject carries a
    face feature within half coverage range. Returned records carry seq
    and seq+1.
    """
    if kind not in SENSE_KINDS.get(sensor.modality, ()):
        return []
    dx = position[0] - sensor.position[0]
    dy = position[1] - sensor.position[1]
    true_dist = math.sqrt(dx * dx + dy * dy)
    if true_dist > sensor.coverage_radius_m:
        return []
    p_eff = sensor.p_base * max(0.0, 1.0 - sensor.occlusion_kappa * crowd_density)
    key = stream_key(seed, "sense", f"{sensor.sensor_id}|{subject_id}")
    base = 4 * t  # time-derived counters: independent of the step grid
    if kernels.u01(key, base) >= p_eff:
        return []
    nx = position[0] + kernels.norm_inv(kernels.u01(key, base + 1)) * POSITION_NOISE_SIGMA_M
    ny = position[1] + kernels.norm_inv(kernels.u01(key, base + 2)) * POSITION_NOISE_SIGMA_M
    nz = position[2] + kernels.norm_inv(kernels.u01(key, base + 3)) * POSITION_NOISE_SIGMA_M
    if bounds is not None:
        nx = _clamp(nx, bounds.x_min, bounds.x_max)
        ny = _clamp(ny, bounds.y_min, bounds.y_max)
    noisy = (nx, ny, nz)
    records = [ObservationRecord(
        seq=seq, source_id=sensor.sensor_id, modality=sensor.modality,
        timestamp_ms=t, subject_id=subject_id, position=noisy,
        payload=_track_payload(sensor, kind, noisy))]
    if (sensor.modality is Modality.CCTV_TRACK and face_feature is not None
            and true_dist <= sensor.coverage_radius_m * FACE_RANGE_FACTOR):
        records.append(ObservationRecord(
            seq=seq + 1, source_id=sensor.sensor_id,
            modality=Modality.FACE_CAPTURE, timestamp_ms=t,
            subject_id=subject_id, position=noisy,
            payload={"feature": list(face_feature)}))
    return records


class _Target:
    """One physically-positioned truth element (actor, object, or walker)."""

    __slots__ = ("entity_id", "kind", "face_feature", "actor", "carrier",
                 "drop_t", "drop_pos", "start_t", "end_t", "crowd_idx")

    def __init__(self, entity_id, kind, face_feature=None, actor=None,
                 carrier=None, drop_t=None, drop_pos=None,
                 start_t=0, end_t=0, crowd_idx=None):
        self.entity_id = entity_id
        self.kind = kind
        self.face_feature = face_feature
        self.actor = actor
        self.carrier = carrier
        self.drop_t = drop_t
        self.drop_pos = drop_pos
        self.start_t = start_t
        self.end_t = end_t
        self.crowd_idx = crowd_idx


class CompiledScenario:
    """Scenario prepared for repeated seeded runs."""

    def __init__(self, spec: ScenarioSpec):
        self.spec = spec
        self.spec_hash = spec.spec_hash()
        self.step_ms = spec.step_ms()
        self.cell_positions = {c.cell_id: c.position for c in spec.cell_map}
        self.sensors = sorted(spec.sensors, key=lambda s: s.sensor_id)

        targets: list[_Target] = []
        phys_actors = [a for a in spec.actors if a.waypoints]
        for actor in sorted(phys_actors, key=lambda a: a.actor_id):
            start_t, end_t = actor.active_window(spec.duration_ms)
            targets.append(_Target(
                entity_id=actor.actor_id, kind=actor.kind,
                face_feature=actor.face_feature, actor=actor,
                start_t=start_t, end_t=end_t))
            for obj_id in sorted(actor.carries):
                drop_t = None
                drop_pos = None
                if actor.drop_at is not None and actor.drop_at[1] == obj_id:
                    drop_t = actor.drop_at[0]
                    drop_pos = actor.position_at(drop_t)
                targets.append(_Target(
                    entity_id=obj_id, kind=EntityKind.OBJECT_TRACK,
                    carrier=actor, drop_t=drop_t, drop_pos=drop_pos,
                    start_t=start_t,
                    end_t=spec.duration_ms if drop_t is not None else end_t))
        self.n_scripted = len(targets)
        for i in range(spec.crowd.count):
            targets.append(_Target(
                entity_id=f"crowd-{i:03d}", kind=EntityKind.PERSON_TRACK,
                start_t=spec.phys_start_ms, end_t=spec.duration_ms, crowd_idx=i))
        self.targets = targets
        self.person_idx = np.asarray(
            [i for i, tg in enumerate(targets)
             if tg.kind is EntityKind.PERSON_TRACK], dtype=np.int64)
        self.eligible = {
            s.sensor_id: np.asarray(
                [1 if tg.kind in SENSE_KINDS[s.modality] else 0 for tg in targets],
                dtype=np.uint8)
            for s in self.sensors}
        self.face_idx = [i for i, tg in enumerate(targets)
                         if tg.face_feature is not None]

        events = []
        for actor in sorted(spec.actors, key=lambda a: a.actor_id):
            for idx, (t, payload) in enumerate(actor.events):
                events.append((t, actor.actor_id, idx, actor, payload))
        events.sort(key=lambda e: (e[0], e[1], e[2]))
        self.scripted_events = events

        self.has_mobile = any(a.kind is EntityKind.MOBILE_DEVICE for a in spec.actors)
        self.has_officer = any(a.kind is EntityKind.OFFICER and a.events
                               for a in spec.actors)

    # -- truth positions ---------------------------------------------------

    def _target_position(self, tg: _Target, t: int):
        if tg.crowd_idx is not None:
            return None  # crowd handled by arrays
        if tg.actor is not None:
            return tg.actor.position_at(t)
        if tg.drop_t is not None and t >= tg.drop_t:
            return tg.drop_pos
        return tg.carrier.position_at(t)

    def run(self, seed: int) -> RunTrace:
        spec = self.spec
        bounds = spec.world_bounds
        registry = WorldRegistry(bounds)
        graph = RelationGraph(registry)
        router = Router(registry, self.cell_positions)
        pipeline = AnalyticsPipeline(
            registry, spec.zones, spec.watchlist, spec.lexicon,
            spec.detector_cfg, self.cell_positions)

        # Static world entities.
        for z in spec.zones:
            cx, cy = z.interior_point()
            registry.register_entity(EntityKind.ZONE, z.zone_id, EntityState(
                timestamp=0, position=(cx, cy, 0.0),
                attributes={"critical": z.is_critical, "area_m2": z.area()}))
        for s in self.sensors:
            registry.register_entity(EntityKind.SENSOR, s.sensor_id, EntityState(
                timestamp=0, position=s.position,
                attributes={"modality": s.modality.value,
                            "coverage_radius_m": s.coverage_radius_m}))
        if self.has_mobile:
            registry.register_entity(EntityKind.SENSOR, MOBILE_SOURCE_ID,
                                     EntityState(timestamp=0))
        if self.has_officer:
            registry.register_entity(EntityKind.SENSOR, OFFICER_SOURCE_ID,
                                     EntityState(timestamp=0))
        for actor in spec.actors:
            if actor.kind is EntityKind.CYBER_SOURCE:
                registry.register_entity(EntityKind.CYBER_SOURCE, actor.actor_id,
                                         EntityState(timestamp=0))
        # Scripted physical entities enter the twin with no position; only
        # observations give them one (ownership is script ground truth).
        for tg in self.targets[:self.n_scripted]:
            registry.register_entity(tg.kind, tg.entity_id, EntityState(
                timestamp=0, attributes={"scripted": True}))
        for actor in spec.actors:
            for obj_id in actor.carries:
                graph.assert_relation(Relation(
                    RelationKind.OWNS, actor.actor_id, obj_id, valid_from=0))

        # Per-run stream state.
        n_targets = len(self.targets)
        txs = np.zeros(n_targets, dtype=np.float64)
        tys = np.zeros(n_targets, dtype=np.float64)
        tzs = np.zeros(n_targets, dtype=np.float64)
        active = np.zeros(n_targets, dtype=np.uint8)
        out_emit = np.zeros(n_targets, dtype=np.uint8)
        out_x = np.zeros(n_targets, dtype=np.float64)
        out_y = np.zeros(n_targets, dtype=np.float64)
        out_z = np.zeros(n_targets, dtype=np.float64)
        sense_keys = {
            s.sensor_id: np.asarray(
                [stream_key(seed, "sense", f"{s.sensor_id}|{tg.entity_id}")
                 for tg in self.targets], dtype=np.uint64)
            for s in self.sensors}

        n_crowd = spec.crowd.count
        crowd_keys = np.asarray(
            [stream_key(seed, "crowd", f"crowd-{i:03d}") for i in range(n_crowd)],
            dtype=np.uint64)
        crowd_ctr = np.zeros(n_crowd, dtype=np.int64)
        cxs = np.zeros(n_crowd, dtype=np.float64)
        cys = np.zeros(n_crowd, dtype=np.float64)
        ctx = np.zeros(n_crowd, dtype=np.float64)
        cty = np.zeros(n_crowd, dtype=np.float64)
        w = bounds.x_max - bounds.x_min
        h = bounds.y_max - bounds.y_min
        for i in range(n_crowd):
            key = int(crowd_keys[i])
            cxs[i] = bounds.x_min + kernels.u01(key, 0) * w
            cys[i] = bounds.y_min + kernels.u01(key, 1) * h
            ctx[i] = bounds.x_min + kernels.u01(key, 2) * w
            cty[i] = bounds.y_min + kernels.u01(key, 3) * h
            crowd_ctr[i] = 4

        observations: list[ObservationRecord] = []
        seq_counters: dict[str, int] = {}
        inside_handles: dict[tuple[str, str], int] = {}

        def next_seq(source_id: str) -> int:
            n = seq_counters.get(source_id, 0) + 1
            seq_counters[source_id] = n
            return n

        def emit(rec: ObservationRecord) -> None:
            router.route_observation(rec)
            observations.append(rec)
            pipeline.on_observation(rec)

        def deliver_event(actor, payload, t) -> None:
            if actor.kind is EntityKind.MOBILE_DEVICE:
                imsi = actor.imsi or actor.actor_id
                emit(ObservationRecord(
                    seq=next_seq(MOBILE_SOURCE_ID), source_id=MOBILE_SOURCE_ID,
                    modality=Modality.MOBILE_NETWORK_EVENT, timestamp_ms=t,
                    payload={"imsi": imsi, "cell_id": payload["cell_id"],
                             "event": payload["event"]}))
            elif actor.kind is EntityKind.CYBER_SOURCE:
                emit(ObservationRecord(
                    seq=next_seq(actor.actor_id), source_id=actor.actor_id,
                    modality=Modality.CYBER_POST, timestamp_ms=t,
                    payload={"text": payload["text"],
                             "platform": payload.get("platform", "forum")}))
            elif actor.kind is EntityKind.OFFICER:
                body = {"text": payload["text"]}
                if payload.get("reported_subject_id"):
                    body["reported_subject_id"] = payload["reported_subject_id"]
                emit(ObservationRecord(
                    seq=next_seq(OFFICER_SOURCE_ID), source_id=OFFICER_SOURCE_ID,
                    modality=Modality.OFFICER_REPORT, timestamp_ms=t,
                    payload=body))

        event_ptr = 0
        events = self.scripted_events
        # Pre-roll: scripted events before the physical window.
        while event_ptr < len(events) and events[event_ptr][0] < spec.phys_start_ms:
            t, _, _, actor, payload = events[event_ptr]
            deliver_event(actor, payload, t)
            event_ptr += 1

        person_idx = self.person_idx
        step = self.step_ms
        dt_s = step / 1000.0
        t = spec.phys_start_ms
        step_idx = 0
        last_tick = spec.phys_start_ms
        while t <= spec.duration_ms:
            while event_ptr < len(events) and events[event_ptr][0] <= t:
                et, _, _, actor, payload = events[event_ptr]
                deliver_event(actor, payload, et)
                event_ptr += 1

            if step_idx > 0 and n_crowd > 0:
                kernels.crowd_step(cxs, cys, ctx, cty, crowd_keys, crowd_ctr,
                                   spec.crowd.speed_mps, dt_s,
                                   bounds.x_min, bounds.y_min,
                                   bounds.x_max, bounds.y_max)

            for i, tg in enumerate(self.targets):
                if tg.crowd_idx is not None:
                    txs[i] = cxs[tg.crowd_idx]
                    tys[i] = cys[tg.crowd_idx]
                    tzs[i] = 0.0
                    active[i] = 1
                    continue
                if tg.start_t <= t <= tg.end_t:
                    pos = self._target_position(tg, t)
                    txs[i] = pos[0]
                    tys[i] = pos[1]
                    tzs[i] = pos[2]
                    active[i] = 1
                else:
                    active[i] = 0

            if len(person_idx) > 0:
                sel = active[person_idx] == 1
                pxs = np.ascontiguousarray(txs[person_idx][sel])
                pys = np.ascontiguousarray(tys[person_idx][sel])
            else:
                pxs = np.zeros(0, dtype=np.float64)
                pys = pxs

            for s in self.sensors:
                if (t - spec.phys_start_ms) % s.period_ms != 0:
                    continue
                n_persons = kernels.count_within(
                    pxs, pys, s.position[0], s.position[1], s.coverage_radius_m)
                rho = n_persons / (math.pi * s.coverage_radius_m ** 2)
                p_eff = s.p_base * max(0.0, 1.0 - s.occlusion_kappa * rho)
                mask = self.eligible[s.sensor_id]
                eff_active = active & mask
                n_emit = kernels.sense_step(
                    sense_keys[s.sensor_id], t, txs, tys, tzs,
                    eff_active, s.position[0], s.position[1],
                    s.coverage_radius_m, p_eff, POSITION_NOISE_SIGMA_M,
                    out_emit, out_x, out_y, out_z)
                if n_emit == 0:
                    continue
                for i in np.nonzero(out_emit)[0]:
                    tg = self.targets[i]
                    nx = _clamp(float(out_x[i]), bounds.x_min, bounds.x_max)
                    ny = _clamp(float(out_y[i]), bounds.y_min, bounds.y_max)
                    noisy = (nx, ny, float(out_z[i]))
                    emit(ObservationRecord(
                        seq=next_seq(s.sensor_id), source_id=s.sensor_id,
                        modality=s.modality, timestamp_ms=t,
                        subject_id=tg.entity_id, position=noisy,
                        payload=_track_payload(s, tg.kind, noisy)))
                    if (s.modality is Modality.CCTV_TRACK
                            and tg.face_feature is not None):
                        dx = txs[i] - s.position[0]
                        dy = tys[i] - s.position[1]
                        if (math.sqrt(dx * dx + dy * dy)
                                <= s.coverage_radius_m * FACE_RANGE_FACTOR):
                            emit(ObservationRecord(
                                seq=next_seq(s.sensor_id), source_id=s.sensor_id,
                                modality=Modality.FACE_CAPTURE, timestamp_ms=t,
                                subject_id=tg.entity_id, position=noisy,
                                payload={"feature": list(tg.face_feature)}))

            if t - last_tick >= spec.eval_period_ms:
                last_tick = t
                self._update_inside_relations(registry, graph, inside_handles, t)
                pipeline.on_tick(t, graph)

            t += step
            step_idx += 1

        while event_ptr < len(events):
            et, _, _, actor, payload = events[event_ptr]
            deliver_event(actor, payload, et)
            event_ptr += 1
        pipeline.on_tick(spec.duration_ms, graph)

        return self._finalize(seed, registry, pipeline, observations)

    def _update_inside_relations(self, registry, graph, handles, t) -> None:
        snap = registry.snapshot(t)
        current = set()
        for eid, state in snap.entities.items():
            if state.position is None:
                continue
            if registry.get(eid).kind in (EntityKind.ZONE, EntityKind.SENSOR):
                continue
            for z in self.spec.zones:
                if z.contains(state.position[0], state.position[1]):
                    current.add((eid, z.zone_id))
                    break
        for key in sorted(current - handles.keys()):
            handles[key] = graph.assert_relation(Relation(
                RelationKind.INSIDE, key[0], key[1], valid_from=t))
        for key in sorted(handles.keys() - current):
            graph.retract(handles.pop(key), t)

    def _finalize(self, seed, registry, pipeline, observations) -> RunTrace:
        spec = self.spec
        alerts = sorted(pipeline.alerts, key=lambda a: (a.t_end, a.alert_id))
        events = evaluate_composite_rules(alerts, spec.rules)

        state = PredictionState(
            lambda_per_ms=math.log(2.0) / spec.prediction_half_life_ms,
            threshold=spec.prediction_threshold)
        timeline = []
        alarms = []
        for a in alerts:
            if a.kind not in INDICATOR_KINDS:
                continue
            state, alarm = update_attack_prediction(state, a, a.t_end)
            timeline.append({"t": a.t_end, "score": state.score,
                             "alarm": alarm, "alert_id": a.alert_id})
            if alarm:
                alarms.append(a.t_end)

        actions = []
        for a in alerts:
            if a.kind is AlertKind.SUSPICIOUS_UXV and a.severity >= 0.7:
                actions.append({"t": a.t_end, "action": "intercept_uxv",
                                "subject": a.entity_ids[0],
                                "detail": f"severity {a.severity:.2f}"})
        for e in events:
            actions.append({"t": e.t_trigger, "action": "dispatch_patrol",
                            "subject": e.zone_id or e.rule_id,
                            "detail": f"composite {e.rule_id}"})
        for t_alarm in alarms:
            actions.append({"t": t_alarm, "action": "raise_alert_level",
                            "subject": "command",
                            "detail": "attack prediction score crossed threshold"})
        actions.sort(key=lambda a: (a["t"], a["action"], a["subject"]))
        for act in actions:
            registry.recommend(act["t"], act["action"], act["subject"], act["detail"])

        t_exec = spec.attack.t_exec_ms if spec.attack else None
        t_first_composite = min((e.t_trigger for e in events), default=None)
        detection_times = []
        if t_exec is not None:
            if t_first_composite is not None and t_first_composite <= t_exec:
                detection_times.append(t_first_composite)
            uxv_ts = [a.t_end for a in alerts
                      if a.kind is AlertKind.SUSPICIOUS_UXV
                      and a.severity >= 0.7 and a.t_end <= t_exec]
            if uxv_ts:
                detection_times.append(min(uxv_ts))
        detected = bool(detection_times)
        outcome = RunOutcome(
            detected_before_exec=detected,
            t_exec_ms=t_exec,
            t_first_composite=t_first_composite,
            t_first_detection_ms=min(detection_times) if detected else None,
            lead_time_ms=(t_exec - t_first_composite
                          if detected and t_first_composite is not None
                          and t_first_composite <= t_exec else None),
        )
        world_meta = {
            "world_bounds": {"x_min": spec.world_bounds.x_min,
                             "y_min": spec.world_bounds.y_min,
                             "x_max": spec.world_bounds.x_max,
                             "y_max": spec.world_bounds.y_max},
            "zones": [{"zone_id": z.zone_id,
                       "polygon": [[x, y] for x, y in z.polygon],
                       "tags": list(z.tags)} for z in spec.zones],
            "sensors": [{"sensor_id": s.sensor_id, "modality": s.modality.value,
                         "position": list(s.position),
                         "coverage_radius_m": s.coverage_radius_m}
                        for s in self.sensors],
            "t_exec_ms": t_exec,
        }
        return RunTrace(
            run_id=run_id_for(self.spec_hash, seed),
            scenario=spec.name,
            spec_hash=self.spec_hash,
            seed=seed,
            duration_ms=spec.duration_ms,
            phys_start_ms=spec.phys_start_ms,
            world_meta=world_meta,
            observations=observations,
            alerts=alerts,
            composite_events=events,
            prediction_timeline=timeline,
            recommended_actions=actions,
            outcome=outcome,
        )


def run_scenario(spec: ScenarioSpec, seed: int) -> RunTrace:
    """Execute one deterministic run of a validated scenario."""
    return CompiledScenario(spec).run(seed)
