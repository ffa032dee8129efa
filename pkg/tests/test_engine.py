"""Simulation engine: sampling, determinism, stream independence."""

import json
import math
import random

from dtss.analytics import OnlineMobileTracker, OnlineUxvTracker
from dtss.detectors import DetectorConfig, classify_uxv_track, detect_mobile_recon
from dtss.engine import (
    CompiledScenario,
    run_scenario,
    sensor_sample,
    trace_to_bytes,
    trace_to_lines,
)
from dtss.geometry import Zone
from dtss.ingest import Modality, parse_observation
from dtss.scenario import SensorSpec, parse_scenario
from dtss.twin import EntityKind, EntityState

from conftest import calibration_doc

SENSOR = SensorSpec(sensor_id="cctv-1", modality=Modality.CCTV_TRACK,
                    position=(0.0, 0.0, 3.0), coverage_radius_m=20.0,
                    p_base=1.0, period_ms=1000, occlusion_kappa=0.0)


def test_sensor_sample_outside_coverage():
    recs = sensor_sample(SENSOR, "p1", EntityKind.PERSON_TRACK,
                         (25.0, 0.0, 0.0), None, 0.0, seed=1, t=0, seq=1)
    assert recs == []


def test_sensor_sample_certain_emission():
    # p_base=1, kappa=0, in range: a record is emitted at every step
    for t in range(0, 20_000, 1000):
        recs = sensor_sample(SENSOR, "p1", EntityKind.PERSON_TRACK,
                             (5.0, 0.0, 0.0), None, 0.0, seed=1, t=t, seq=1)
        assert len(recs) == 1  # no face feature -> track record only
        assert recs[0].modality is Modality.CCTV_TRACK
        assert recs[0].payload["kind"] == "PersonTrack"


def test_sensor_sample_face_capture_range():
    feature = tuple([1.0] + [0.0] * 127)
    near = sensor_sample(SENSOR, "p1", EntityKind.PERSON_TRACK,
                         (5.0, 0.0, 0.0), feature, 0.0, seed=1, t=0, seq=3)
    assert [r.modality for r in near] == [Modality.CCTV_TRACK,
                                          Modality.FACE_CAPTURE]
    assert [r.seq for r in near] == [3, 4]
    far = sensor_sample(SENSOR, "p1", EntityKind.PERSON_TRACK,
                        (15.0, 0.0, 0.0), feature, 0.0, seed=1, t=0, seq=3)
    assert [r.modality for r in far] == [Modality.CCTV_TRACK]


def test_sensor_sample_wrong_kind_for_modality():
    sonar = SensorSpec(sensor_id="sonar-1", modality=Modality.SONAR_CONTACT,
                       position=(0.0, 0.0, 0.0), coverage_radius_m=50.0,
                       p_base=1.0, period_ms=1000)
    assert sensor_sample(sonar, "p1", EntityKind.PERSON_TRACK,
                         (5.0, 0.0, 0.0), None, 0.0, seed=1, t=0, seq=1) == []
    assert len(sensor_sample(sonar, "u1", EntityKind.UUV,
                             (5.0, 0.0, -3.0), None, 0.0, seed=1, t=0, seq=1)) == 1


def test_sensor_sample_occlusion_probability():
    """p = p_base * max(0, 1 - kappa * rho): empirical rate within +-0.01
    over 1e5 counter-based draws (spec example: 0.5 * (1 - 0.3) = 0.35)."""
    sensor = SensorSpec(sensor_id="s", modality=Modality.CCTV_TRACK,
                        position=(0.0, 0.0, 3.0), coverage_radius_m=20.0,
                        p_base=0.5, period_ms=1000, occlusion_kappa=0.3)
    n = 100_000
    hits = 0
    for i in range(n):
        recs = sensor_sample(sensor, "p1", EntityKind.PERSON_TRACK,
                             (5.0, 0.0, 0.0), None, 1.0, seed=7, t=i * 1000,
                             seq=1)
        hits += bool(recs)
    assert abs(hits / n - 0.35) < 0.01


def test_sensor_sample_noise_distribution():
    sensor = SensorSpec(sensor_id="s", modality=Modality.CCTV_TRACK,
                        position=(50.0, 50.0, 3.0), coverage_radius_m=30.0,
                        p_base=1.0, period_ms=1000)
    xs = []
    for i in range(20_000):
        (rec,) = sensor_sample(sensor, "p1", EntityKind.PERSON_TRACK,
                               (55.0, 50.0, 0.0), None, 0.0, seed=3,
                               t=i * 1000, seq=1)
        xs.append(rec.position[0] - 55.0)
    mean = sum(xs) / len(xs)
    var = sum((v - mean) ** 2 for v in xs) / len(xs)
    assert abs(mean) < 0.01
    assert abs(math.sqrt(var) - 0.5) < 0.02


def test_engine_batch_matches_scalar_sampler():
    """The engine's batched kernel path and the standalone sampler must
    produce identical records for identical (seed, time, pair)."""
    spec = parse_scenario(calibration_doc(p_base=0.7, n_opportunities=8))
    compiled = CompiledScenario(spec)
    trace = compiled.run(9)
    sensor = compiled.sensors[0]
    track_recs = [r for r in trace.observations
                  if r.source_id == sensor.sensor_id]
    assert track_recs, "expected some emissions"
    intruder = [a for a in spec.actors if a.actor_id == "intruder"][0]
    for rec in track_recs:
        if rec.modality is not Modality.CCTV_TRACK:
            continue
        truth = intruder.position_at(rec.timestamp_ms)
        got = sensor_sample(sensor, "intruder", EntityKind.PERSON_TRACK,
                            truth, intruder.face_feature, 0.0,
                            seed=9, t=rec.timestamp_ms, seq=rec.seq,
                            bounds=spec.world_bounds)
        assert got, f"scalar sampler missed emission at t={rec.timestamp_ms}"
        assert got[0] == rec


def test_zero_sensor_scenario():
    doc = calibration_doc()
    doc["sensors"] = []
    spec = parse_scenario(doc)
    trace = run_scenario(spec, 1)
    assert trace.observations == []
    assert trace.alerts == []
    assert trace.outcome.detected_before_exec is False


def test_run_determinism(calibration_spec):
    a = trace_to_bytes(CompiledScenario(calibration_spec).run(42))
    b = trace_to_bytes(CompiledScenario(calibration_spec).run(42))
    assert a == b
    c = trace_to_bytes(CompiledScenario(calibration_spec).run(43))
    assert a != c


def test_engine_records_parse_as_valid_wire_format():
    """Every record the engine emits must satisfy the ingest schema."""
    from dtss.scenario import load_bundled
    spec = load_bundled("cathedral_uav")
    trace = CompiledScenario(spec).run(5)
    assert len(trace.observations) > 500
    for line in trace_to_lines(trace):
        obj = json.loads(line)
        if obj.get("type") != "observation":
            continue
        obj.pop("type")
        parse_observation(json.dumps(obj))


def test_trace_line_times_nondecreasing(calibration_spec):
    trace = CompiledScenario(calibration_spec).run(3)
    times = []
    for line in trace_to_lines(trace):
        obj = json.loads(line)
        if obj.get("type") in ("meta", "outcome"):
            continue
        for key in ("timestamp_ms", "t_end", "t_trigger", "t"):
            if key in obj:
                times.append(obj[key])
                break
    assert times == sorted(times)


def test_preroll_events_keep_timestamps():
    from dtss.scenario import load_bundled
    spec = load_bundled("metro_bomb")
    trace = CompiledScenario(spec).run(11)
    mobile = [r for r in trace.observations
              if r.modality is Modality.MOBILE_NETWORK_EVENT]
    assert mobile[0].timestamp_ms < spec.phys_start_ms  # day-granular pre-roll
    officer = [r for r in trace.observations
               if r.modality is Modality.OFFICER_REPORT]
    assert len(officer) == 1


def test_stream_independence_adding_sensor(calibration_spec):
    """Pre-existing sensors' records must be byte-identical when another
    sensor is added (counter-based per-pair streams)."""
    doc = calibration_doc()
    base = parse_scenario(doc)
    doc2 = calibration_doc()
    doc2["sensors"].append({
        "sensor_id": "cctv-extra", "modality": "CctvTrack",
        "position": [60, 30, 3], "coverage_radius_m": 25,
        "p_base": 0.9, "period_ms": 1000, "occlusion_kappa": 0})
    extended = parse_scenario(doc2)
    for seed in range(5):
        t1 = CompiledScenario(base).run(seed)
        t2 = CompiledScenario(extended).run(seed)
        old = [r for r in t2.observations if r.source_id == "cctv-1"]
        assert old == t1.observations


def test_stream_independence_adding_actor():
    """Adding an actor never perturbs draws for existing (sensor, target)
    pairs: the original actor's records are unchanged."""
    base = parse_scenario(calibration_doc())
    doc = calibration_doc()
    doc["actors"].append({
        "actor_id": "bystander", "kind": "PersonTrack",
        "waypoints": [[0, [30, 35, 0]], [5000, [10, 35, 0]]]})
    extended = parse_scenario(doc)
    for seed in range(5):
        t1 = CompiledScenario(base).run(seed)
        t2 = CompiledScenario(extended).run(seed)
        mine = [r._replace_seq() if False else r for r in t2.observations
                if r.subject_id == "intruder"]
        orig = [r for r in t1.observations if r.subject_id == "intruder"]
        # seq numbering may shift (shared per-source counter); compare
        # everything except seq
        strip = lambda r: (r.source_id, r.modality, r.timestamp_ms,
                           r.subject_id, r.position, tuple(sorted(
                               (k, tuple(v) if isinstance(v, list) else v)
                               for k, v in r.payload.items())))
        assert [strip(r) for r in mine] == [strip(r) for r in orig]


def test_crowd_positions_respect_bounds():
    doc = calibration_doc()
    doc["crowd"] = {"count": 10, "speed_mps": 1.4}
    spec = parse_scenario(doc)
    trace = CompiledScenario(spec).run(2)
    crowd_obs = [r for r in trace.observations
                 if r.subject_id and r.subject_id.startswith("crowd-")]
    wb = spec.world_bounds
    for rec in crowd_obs:
        assert wb.x_min <= rec.position[0] <= wb.x_max
        assert wb.y_min <= rec.position[1] <= wb.y_max


def test_online_uxv_matches_pure_classifier():
    r = random.Random(12)
    cfg = DetectorConfig()
    zones = [Zone("z", [(50, 50), (90, 50), (90, 90), (50, 90)], ["critical"])]
    for trial in range(25):
        n = r.randint(3, 40)
        t = 0
        x, y = r.uniform(0, 120), r.uniform(0, 120)
        samples = []
        for _ in range(n):
            t += r.randint(500, 2000)
            x += r.uniform(-8, 8)
            y += r.uniform(-8, 8)
            samples.append(EntityState(t, (x, y, 0.0)))
        kind = r.choice([EntityKind.UAV, EntityKind.USV, EntityKind.UUV])
        tracker = OnlineUxvTracker("e", kind, cfg, zones)
        for s in samples:
            tracker.on_sample(s.timestamp, s.position[0], s.position[1])
        got = tracker.score()
        want_score, _ = classify_uxv_track(kind, samples, zones, cfg)
        assert got is not None
        assert got[0] == want_score  # bit-identical aggregation


def test_online_mobile_matches_pure_detector():
    r = random.Random(55)
    cfg = DetectorConfig()
    zones = [Zone("z", [(0, 0), (100, 0), (100, 100), (0, 100)], ["critical"])]
    cells = {"near": (50.0, 50.0, 0.0), "far": (9000.0, 9000.0, 0.0)}
    near_map = {cid: zones[0].distance_to(p[0], p[1]) <= cfg.recon_radius_m
                for cid, p in cells.items()}
    for trial in range(25):
        events = []
        t = 0
        for _ in range(r.randint(0, 40)):
            t += r.randint(1000, 2 * 86_400_000)
            events.append((t, r.choice(["near", "far"]),
                           r.choice(["register", "call", "data"])))
        tracker = OnlineMobileTracker("dev", cfg, near_map, cells)
        got = []
        for t, cell, ev in events:
            got.extend(tracker.on_event(t, cell, ev))
        want = detect_mobile_recon("dev", events, zones, cells, cfg)
        assert [(a.kind, a.t_start, a.t_end) for a in
                sorted(got, key=lambda a: (a.t_end, a.alert_id))] == \
            [(a.kind, a.t_start, a.t_end) for a in want]


def test_run_trace_timestamps_within_duration():
    from dtss.scenario import load_bundled
    for name in ("metro_bomb", "waterfront_hybrid", "cathedral_uav"):
        spec = load_bundled(name)
        trace = CompiledScenario(spec).run(1)
        assert all(r.timestamp_ms <= spec.duration_ms
                   for r in trace.observations)
        assert all(a.t_end <= spec.duration_ms for a in trace.alerts)
