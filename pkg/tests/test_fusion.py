"""Multi-entity services: area picture, composite rules, prediction, reports."""

import itertools
import math
import random

import pytest

from dtss.detectors import Alert, AlertKind
from dtss.errors import TimeRegressionError, UnorderedAlertsError
from dtss.fusion import (
    Audience,
    CompositeRule,
    PredictionState,
    SpatialMode,
    evaluate_composite_rules,
    export_report,
    fuse_area_picture,
    render_report_text,
    report_to_json,
    update_attack_prediction,
)
from dtss.geometry import Zone
from dtss.twin import EntityKind, EntityState, WorldBounds, WorldRegistry

ZONES = [
    Zone("za", [(0, 0), (10, 0), (10, 10), (0, 10)], ["critical"]),
    Zone("zb", [(20, 0), (30, 0), (30, 10), (20, 10)]),
]


def snapshot_of(positions):
    reg = WorldRegistry(WorldBounds(0, 0, 100, 100))
    kinds = {}
    for eid, (pos, kind) in positions.items():
        reg.register_entity(kind, eid, EntityState(0, pos))
        kinds[eid] = kind
    return reg.snapshot(0), kinds


def mk_alert(aid, kind, sev, ents, t0, t1, **ev):
    return Alert(alert_id=aid, kind=kind, severity=sev,
                 entity_ids=tuple(ents), t_start=t0, t_end=t1, evidence=ev)


# --- area picture --------------------------------------------------------

def test_area_picture_empty():
    snap, kinds = snapshot_of({})
    pic = fuse_area_picture(snap, ZONES, [], kinds)
    assert all(z.entity_count == 0 for z in pic.per_zone.values())
    assert pic.unassigned_count == 0


def test_area_picture_density():
    positions = {f"p{i}": ((2.0 + i, 2.0, 0.0), EntityKind.PERSON_TRACK)
                 for i in range(4)}
    snap, kinds = snapshot_of(positions)
    pic = fuse_area_picture(snap, ZONES, [], kinds)
    za = pic.per_zone["za"]
    assert za.person_count == 4
    assert za.density_per_m2 == pytest.approx(0.04)


def test_area_picture_counts_match_oracle():
    from shapely.geometry import Point, Polygon
    r = random.Random(11)
    positions = {}
    for i in range(25):
        kind = EntityKind.PERSON_TRACK if r.random() < 0.6 else EntityKind.SENSOR
        positions[f"e{i:02d}"] = ((r.uniform(0, 40), r.uniform(0, 12), 0.0), kind)
    snap, kinds = snapshot_of(positions)
    pic = fuse_area_picture(snap, ZONES, [], kinds)
    shp = {z.zone_id: Polygon(z.polygon) for z in ZONES}
    for z in ZONES:
        want = sum(1 for eid, (pos, _) in positions.items()
                   if shp[z.zone_id].covers(Point(pos[:2])))
        assert pic.per_zone[z.zone_id].entity_count == want
    # conservation: every positioned entity lands exactly once
    total = sum(z.entity_count for z in pic.per_zone.values())
    assert total + pic.unassigned_count == len(positions)


def test_area_picture_attaches_alerts():
    positions = {"p1": ((5.0, 5.0, 0.0), EntityKind.PERSON_TRACK),
                 "p2": ((25.0, 5.0, 0.0), EntityKind.PERSON_TRACK)}
    snap, kinds = snapshot_of(positions)
    alerts = [mk_alert("a1", AlertKind.LOITERING, 0.5, ["p1"], 0, 10),
              mk_alert("a2", AlertKind.LOITERING, 0.5, ["p2"], 0, 10),
              mk_alert("a3", AlertKind.LOITERING, 0.5, ["ghost"], 0, 10)]
    pic = fuse_area_picture(snap, ZONES, alerts, kinds)
    assert pic.per_zone["za"].active_alert_ids == ("a1",)
    assert pic.per_zone["zb"].active_alert_ids == ("a2",)


# --- composite rules -------------------------------------------------------

RULE_AB = CompositeRule(rule_id="r1",
                        required_kinds=frozenset({AlertKind.ABANDONED_OBJECT,
                                                  AlertKind.LOITERING}),
                        window_ms=120_000, spatial=SpatialMode.SAME_ZONE,
                        min_severity=0.0)


def test_composite_same_zone_pair():
    alerts = [
        mk_alert("L1", AlertKind.LOITERING, 0.6, ["p1"], 0, 10_000, zone_id="za"),
        mk_alert("A1", AlertKind.ABANDONED_OBJECT, 0.7, ["bag"], 0, 40_000,
                 zone_id="za"),
    ]
    events = evaluate_composite_rules(alerts, [RULE_AB])
    assert len(events) == 1
    assert events[0].t_trigger == 40_000  # the later alert completes the rule
    assert set(events[0].member_alert_ids) == {"L1", "A1"}
    assert events[0].zone_id == "za"


def test_composite_window_exceeded():
    alerts = [
        mk_alert("L1", AlertKind.LOITERING, 0.6, ["p1"], 0, 10_000, zone_id="za"),
        mk_alert("A1", AlertKind.ABANDONED_OBJECT, 0.7, ["bag"], 0, 210_000,
                 zone_id="za"),
    ]
    assert evaluate_composite_rules(alerts, [RULE_AB]) == []


def test_composite_different_zones():
    alerts = [
        mk_alert("L1", AlertKind.LOITERING, 0.6, ["p1"], 0, 10_000, zone_id="za"),
        mk_alert("A1", AlertKind.ABANDONED_OBJECT, 0.7, ["bag"], 0, 40_000,
                 zone_id="zb"),
    ]
    assert evaluate_composite_rules(alerts, [RULE_AB]) == []


def test_composite_unordered_rejected():
    alerts = [
        mk_alert("A1", AlertKind.ABANDONED_OBJECT, 0.7, ["bag"], 0, 40_000),
        mk_alert("L1", AlertKind.LOITERING, 0.6, ["p1"], 0, 10_000),
    ]
    with pytest.raises(UnorderedAlertsError):
        evaluate_composite_rules(alerts, [RULE_AB])


def test_composite_consumption():
    """Each alert fires a rule at most once."""
    alerts = [
        mk_alert("L1", AlertKind.LOITERING, 0.6, ["p1"], 0, 10_000, zone_id="za"),
        mk_alert("A1", AlertKind.ABANDONED_OBJECT, 0.7, ["b1"], 0, 20_000,
                 zone_id="za"),
        mk_alert("A2", AlertKind.ABANDONED_OBJECT, 0.7, ["b2"], 0, 30_000,
                 zone_id="za"),
    ]
    events = evaluate_composite_rules(alerts, [RULE_AB])
    assert len(events) == 1  # L1 consumed by the first event


def test_composite_within_distance():
    rule = CompositeRule(rule_id="rw",
                         required_kinds=frozenset({AlertKind.LOITERING,
                                                   AlertKind.WATCHLIST_MATCH}),
                         window_ms=60_000, spatial=SpatialMode.WITHIN,
                         within_m=10.0)
    near = [
        mk_alert("L1", AlertKind.LOITERING, 0.6, ["p1"], 0, 1_000, x=0.0, y=0.0),
        mk_alert("W1", AlertKind.WATCHLIST_MATCH, 0.9, ["p2"], 0, 2_000,
                 x=6.0, y=8.0),
    ]
    assert len(evaluate_composite_rules(near, [rule])) == 1  # dist == 10
    far = [
        mk_alert("L1", AlertKind.LOITERING, 0.6, ["p1"], 0, 1_000, x=0.0, y=0.0),
        mk_alert("W1", AlertKind.WATCHLIST_MATCH, 0.9, ["p2"], 0, 2_000,
                 x=60.0, y=8.0),
    ]
    assert evaluate_composite_rules(far, [rule]) == []


def composite_oracle(alerts, rule):
    """Brute-force replay: at each arrival enumerate all combinations of
    unconsumed in-window candidates, pick the maximum per the most-recent/
    smallest-id ordering among those satisfying the spatial constraint."""
    kinds = sorted(rule.required_kinds, key=lambda k: k.value)
    consumed = set()
    events = []
    seen = []
    for alert in alerts:
        if alert.kind in rule.required_kinds and alert.severity >= rule.min_severity:
            seen.append(alert)
        now = alert.t_end
        pools = []
        for kind in kinds:
            pool = [a for a in seen
                    if a.kind == kind and a.alert_id not in consumed
                    and now - rule.window_ms < a.t_end <= now]
            pools.append(pool)
        if any(not pool for pool in pools):
            continue
        valid = []
        for combo in itertools.product(*pools):
            if _spatial_ok(rule, combo):
                valid.append(combo)
        if not valid:
            continue
        # preference order: most recent t_end first, ties smaller alert_id,
        # compared kind-position by kind-position
        def key(combo):
            return tuple((-a.t_end, a.alert_id) for a in combo)

        best = min(valid, key=key)
        for a in best:
            consumed.add(a.alert_id)
        events.append((now, tuple(sorted(a.alert_id for a in best))))
    return events


def _spatial_ok(rule, combo):
    if rule.spatial == SpatialMode.ANY:
        return True
    if rule.spatial == SpatialMode.SAME_ZONE:
        zones = {a.evidence.get("zone_id") for a in combo}
        return len(zones) == 1 and None not in zones
    pts = []
    for a in combo:
        if "x" not in a.evidence or "y" not in a.evidence:
            return False
        pts.append((a.evidence["x"], a.evidence["y"]))
    return all(math.dist(p, q) <= rule.within_m
               for p in pts for q in pts)


def random_alert_stream(r, n):
    kinds = [AlertKind.LOITERING, AlertKind.ABANDONED_OBJECT,
             AlertKind.WATCHLIST_MATCH]
    zones = ["za", "zb", None]
    alerts = []
    t = 0
    for i in range(n):
        t += r.randint(0, 30_000)
        ev = {}
        zone = r.choice(zones)
        if zone is not None:
            ev["zone_id"] = zone
        if r.random() < 0.8:
            ev["x"] = r.uniform(0, 50)
            ev["y"] = r.uniform(0, 50)
        alerts.append(mk_alert(f"a{i:02d}", r.choice(kinds),
                               round(r.uniform(0.2, 1.0), 3), ["e"], max(0, t - 5_000),
                               t, **ev))
    return alerts


def random_rule(r):
    n_kinds = r.randint(1, 3)
    kinds = r.sample([AlertKind.LOITERING, AlertKind.ABANDONED_OBJECT,
                      AlertKind.WATCHLIST_MATCH], n_kinds)
    spatial = r.choice(list(SpatialMode))
    return CompositeRule(
        rule_id="rnd", required_kinds=frozenset(kinds),
        window_ms=r.randint(10_000, 90_000), spatial=spatial,
        within_m=r.uniform(5, 40) if spatial == SpatialMode.WITHIN else 0.0,
        min_severity=r.choice([0.0, 0.3, 0.6]))


@pytest.mark.parametrize("trial", range(120))
def test_composite_matches_exhaustive_oracle(trial):
    r = random.Random(9_000 + trial)
    alerts = random_alert_stream(r, r.randint(0, 10))
    rule = random_rule(r)
    events = evaluate_composite_rules(alerts, [rule])
    got = [(e.t_trigger, e.member_alert_ids) for e in events]
    assert got == composite_oracle(alerts, rule)


# --- attack prediction -----------------------------------------------------

def ind(aid, sev, t):
    return mk_alert(aid, AlertKind.CYBER_INDICATOR, sev, ["src"], t, t)


def test_prediction_empty_score():
    state = PredictionState()
    assert state.score_at(1_000_000) == 0.0


def test_prediction_no_decay_at_arrival_time():
    state = PredictionState()
    state, alarm = update_attack_prediction(state, ind("i1", 0.8, 5_000), 5_000)
    assert state.score == pytest.approx(0.8)
    assert not alarm


def test_prediction_closed_form_alarm():
    lam = math.log(2) / 3_600_000
    state = PredictionState(lambda_per_ms=lam, threshold=1.0)
    state, alarm1 = update_attack_prediction(state, ind("i1", 0.8, 0), 0)
    assert not alarm1
    state, alarm2 = update_attack_prediction(state, ind("i2", 0.6, 3_600_000),
                                             3_600_000)
    assert state.score == pytest.approx(0.8 * 0.5 + 0.6, rel=1e-12)
    assert alarm2


def test_prediction_halflife_decay():
    lam = math.log(2) / 60_000
    state = PredictionState(lambda_per_ms=lam, threshold=10.0)
    update_attack_prediction(state, ind("i1", 1.0, 0), 0)
    for k in range(1, 6):
        assert state.score_at(k * 60_000) == pytest.approx(0.5 ** k, rel=1e-9)


def test_prediction_time_regression():
    state = PredictionState()
    update_attack_prediction(state, ind("i1", 0.5, 1_000), 1_000)
    with pytest.raises(TimeRegressionError):
        update_attack_prediction(state, ind("i2", 0.5, 500), 500)


def test_prediction_ignores_non_indicators():
    state = PredictionState()
    loiter = mk_alert("L", AlertKind.LOITERING, 0.9, ["p"], 0, 0)
    state, alarm = update_attack_prediction(state, loiter, 0)
    assert state.score == 0.0 and not alarm


def test_prediction_single_fire_and_rearm():
    lam = math.log(2) / 10_000  # fast decay for the test
    state = PredictionState(lambda_per_ms=lam, threshold=1.0)
    _, a1 = update_attack_prediction(state, ind("i1", 0.8, 0), 0)
    assert not a1
    _, a2 = update_attack_prediction(state, ind("i2", 0.8, 100), 100)
    assert a2  # crossing: ~0.794 + 0.8
    # still above threshold at the next arrival: no second alarm
    _, a3 = update_attack_prediction(state, ind("i3", 0.5, 200), 200)
    assert state.score > state.threshold and not a3
    # decay far below threshold re-arms; the next big arrival crosses again
    _, a4 = update_attack_prediction(state, ind("i4", 1.0, 300_000), 300_000)
    assert a4


@pytest.mark.parametrize("trial", range(100))
def test_prediction_alarm_per_crossing(trial):
    """ALARM count equals the number of below->above threshold crossings."""
    r = random.Random(31_337 + trial)
    lam = math.log(2) / r.randint(5_000, 120_000)
    threshold = r.uniform(0.5, 2.0)
    state = PredictionState(lambda_per_ms=lam, threshold=threshold)
    t = 0
    alarms = 0
    crossings = 0
    prev_below = True
    for i in range(r.randint(1, 40)):
        t += r.randint(0, 60_000)
        sev = round(r.uniform(0.1, 1.0), 3)
        pre = state.score_at(t)
        if pre < threshold:
            prev_below = True
        state, alarm = update_attack_prediction(state, ind(f"i{i}", sev, t), t)
        if alarm:
            alarms += 1
        if prev_below and state.score >= threshold:
            crossings += 1
            prev_below = False
    assert alarms == crossings


def test_prediction_score_increments_by_severity():
    r = random.Random(8)
    state = PredictionState(threshold=100.0)
    t = 0
    for i in range(20):
        t += r.randint(1, 50_000)
        sev = round(r.uniform(0, 1), 3)
        pre = state.score_at(t)
        state, _ = update_attack_prediction(state, ind(f"i{i}", sev, t), t)
        assert state.score == pytest.approx(pre + sev, rel=1e-12)


# --- report export -----------------------------------------------------

def sample_alerts():
    return [
        mk_alert("W1", AlertKind.WATCHLIST_MATCH, 0.93, ["p1"], 10, 10,
                 suspect_id="anna", similarity=0.93),
        mk_alert("M1", AlertKind.MOBILE_RECON, 0.8, ["imsi-123456789"], 0, 20,
                 imsi="310150123456789", days="1,5,9"),
    ]


def test_report_empty_inputs():
    report = export_report([], [], Audience.LOCAL)
    assert report["generated_for"] == "LOCAL"
    assert report["events"] == [] and report["alerts"] == []
    assert "SECURITY REPORT" in render_report_text(report)


def test_report_national_masks_imsi():
    report = export_report([], sample_alerts(), Audience.NATIONAL)
    recon = [a for a in report["alerts"] if a["kind"] == "MOBILE_RECON"][0]
    assert recon["evidence"]["imsi"] == "***6789"
    wl = [a for a in report["alerts"] if a["kind"] == "WATCHLIST_MATCH"][0]
    assert wl["evidence"]["similarity"] == 0.93  # kept at NATIONAL


def test_report_local_keeps_imsi():
    report = export_report([], sample_alerts(), Audience.LOCAL)
    recon = [a for a in report["alerts"] if a["kind"] == "MOBILE_RECON"][0]
    assert recon["evidence"]["imsi"] == "310150123456789"


def test_report_international_drops_similarity_and_text():
    officer = [{"timestamp_ms": 5, "source_id": "officer-desk",
                "text": "saw something"}]
    report = export_report([], sample_alerts(), Audience.INTERNATIONAL,
                           officer_reports=officer)
    wl = [a for a in report["alerts"] if a["kind"] == "WATCHLIST_MATCH"][0]
    assert "similarity" not in wl["evidence"]
    assert "text" not in report["officer_reports"][0]


def test_report_redaction_does_not_mutate_inputs():
    alerts = sample_alerts()
    export_report([], alerts, Audience.INTERNATIONAL)
    assert alerts[0].evidence["similarity"] == 0.93
    assert alerts[1].evidence["imsi"] == "310150123456789"


def test_report_byte_identical():
    alerts = sample_alerts()
    a = report_to_json(export_report([], alerts, Audience.NATIONAL, run_id="r1"))
    b = report_to_json(export_report([], alerts, Audience.NATIONAL, run_id="r1"))
    assert a == b
