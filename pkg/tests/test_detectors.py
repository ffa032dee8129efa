"""Single-entity detectors against brute-force oracles and spec cases."""

import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dtss.detectors import (
    AlertKind,
    DetectorConfig,
    classify_uxv_track,
    detect_abandoned_object,
    detect_loitering,
    detect_mobile_recon,
    load_lexicon,
    match_watchlist,
    score_cyber_text,
)
from dtss.errors import (
    EmptyLexiconError,
    InvalidFeatureError,
    TooFewSamplesError,
    UnorderedEventsError,
    UnorderedTrackError,
    WrongKindError,
)
from dtss.geometry import Zone
from dtss.ingest import Watchlist, WatchlistEntry
from dtss.relations import Relation, RelationGraph, RelationKind
from dtss.rng import unit_vector
from dtss.twin import EntityKind, EntityState, WorldBounds, WorldRegistry

CFG = DetectorConfig()


def track(points):
    """points: (t, x, y) triples."""
    return [EntityState(t, (float(x), float(y), 0.0)) for t, x, y in points]


# --- loitering --------------------------------------------------------------

def loiter_oracle(samples, cfg):
    """All-window scan over one track; maximal-by-containment windows."""
    pts = [(s.timestamp, s.position[0], s.position[1]) for s in samples
           if s.position is not None]
    n = len(pts)
    qualifying = []
    for i in range(n):
        for j in range(i, n):
            if pts[j][0] - pts[i][0] < cfg.loiter_min_ms:
                continue
            if all(math.dist(pts[k][1:], pts[i][1:]) <= cfg.loiter_radius_m
                   for k in range(i, j + 1)):
                qualifying.append((i, j))
    maximal = [(i, j) for (i, j) in qualifying
               if not any(i2 <= i and j2 >= j and (i2, j2) != (i, j)
                          for (i2, j2) in qualifying)]
    return sorted((pts[i][0], pts[j][0]) for i, j in maximal)


def test_loiter_single_sample_no_alert():
    assert detect_loitering("p1", track([(0, 0, 0)]), CFG) == []


def test_loiter_stationary_600s():
    samples = track([(i * 1000, 10.0, 10.0) for i in range(601)])
    alerts = detect_loitering("p1", samples, CFG)
    assert len(alerts) == 1
    a = alerts[0]
    assert (a.t_start, a.t_end) == (0, 600000)
    assert a.evidence["dwell_ms"] == 600000
    assert a.severity == 1.0
    assert loiter_oracle(samples, CFG) == [(0, 600000)]


def test_loiter_constant_walk_no_alert():
    samples = track([(i * 1000, 2.0 * i, 0.0) for i in range(400)])
    assert detect_loitering("p1", samples, CFG) == []
    assert loiter_oracle(samples, CFG) == []


def test_loiter_unordered_rejected():
    with pytest.raises(UnorderedTrackError):
        detect_loitering("p1", track([(10, 0, 0), (5, 0, 0)]), CFG)


def random_track(r, n):
    pts = []
    t = 0
    x, y = 0.0, 0.0
    for _ in range(n):
        t += r.randint(200, 3000)
        if r.random() < 0.25:
            x += r.uniform(-25, 25)
            y += r.uniform(-25, 25)
        else:
            x += r.uniform(-1.2, 1.2)
            y += r.uniform(-1.2, 1.2)
        pts.append((t, x, y))
    return track(pts)


@pytest.mark.parametrize("trial", range(50))
def test_loiter_matches_oracle(trial):
    r = random.Random(5000 + trial)
    cfg = DetectorConfig(loiter_radius_m=r.uniform(2, 8),
                         loiter_min_ms=r.randint(2000, 15000))
    samples = random_track(r, r.randint(2, 50))
    got = [(a.t_start, a.t_end) for a in detect_loitering("p1", samples, cfg)]
    assert sorted(got) == loiter_oracle(samples, cfg)


def test_loiter_severity_formula():
    cfg = DetectorConfig(loiter_min_ms=10000)
    samples = track([(i * 1000, 0, 0) for i in range(16)])  # dwell 15 s
    (alert,) = detect_loitering("p1", samples, cfg)
    assert alert.severity == pytest.approx(15000 / 20000)


# --- abandonment ---------------------------------------------------------

def build_abandon_world(owner_pts, object_pts, owns_from=0, owns_to=None,
                        zones=()):
    reg = WorldRegistry(WorldBounds(0, 0, 500, 500))
    reg.register_entity(EntityKind.PERSON_TRACK, "owner",
                        EntityState(owner_pts[0][0],
                                    (owner_pts[0][1], owner_pts[0][2], 0.0)))
    for t, x, y in owner_pts[1:]:
        reg.apply_observation("owner", EntityState(t, (x, y, 0.0)))
    reg.register_entity(EntityKind.OBJECT_TRACK, "bag",
                        EntityState(object_pts[0][0],
                                    (object_pts[0][1], object_pts[0][2], 0.0)))
    for t, x, y in object_pts[1:]:
        reg.apply_observation("bag", EntityState(t, (x, y, 0.0)))
    graph = RelationGraph(reg)
    graph.assert_relation(Relation(RelationKind.OWNS, "owner", "bag",
                                   owns_from, owns_to))
    return reg, graph


def test_abandon_owner_close_no_alert():
    owner = [(i * 1000, 2.0, 0.0) for i in range(200)]
    obj = [(i * 1000, 0.0, 0.0) for i in range(200)]
    reg, graph = build_abandon_world(owner, obj)
    assert detect_abandoned_object("bag", reg, graph, CFG) == []


def test_abandon_owner_walks_away():
    # owner walks 50 m away at t=10 s and stays there for 120 s
    owner = [(t * 1000, 0.0 if t < 10 else 50.0, 0.0) for t in range(131)]
    obj = [(t * 1000, 0.0, 0.0) for t in range(131)]
    reg, graph = build_abandon_world(owner, obj)
    alerts = detect_abandoned_object("bag", reg, graph, CFG)
    assert len(alerts) == 1
    a = alerts[0]
    assert a.severity == 0.7
    assert a.evidence["owner_id"] == "owner"
    assert a.evidence["max_separation_m"] == 50.0
    assert a.t_start == 10000 and a.t_end == 130000


def test_abandon_critical_zone_severity():
    zones = [Zone("plaza", [(-5, -5), (5, -5), (5, 5), (-5, 5)], ["critical"])]
    owner = [(t * 1000, 0.0 if t < 10 else 80.0, 0.0) for t in range(101)]
    obj = [(t * 1000, 0.0, 0.0) for t in range(101)]
    reg, graph = build_abandon_world(owner, obj)
    alerts = detect_abandoned_object("bag", reg, graph, CFG, zones=zones)
    assert len(alerts) == 1
    assert alerts[0].severity == 1.0


def test_abandon_orphan_object():
    # ownership expires at t=20 s; dropped ObjectTrack then counts abandoned
    owner = [(0, 0.0, 0.0)]
    obj = [(t * 1000, 0.0, 0.0) for t in range(101)]
    reg, graph = build_abandon_world(owner, obj, owns_from=0, owns_to=20000)
    alerts = detect_abandoned_object("bag", reg, graph, CFG)
    assert len(alerts) == 1
    assert alerts[0].t_start == 20000
    assert "owner_id" not in alerts[0].evidence


def abandon_oracle(reg, graph, cfg, object_id="bag"):
    """Independent re-derivation: evaluate the separated/orphaned predicate
    at each sample time with fresh code, collect qualifying true-runs."""
    obj = reg.get(object_id)
    owns = [r for r in graph.all_relations()
            if r.kind == RelationKind.OWNS and r.dst == object_id]
    times = sorted({s.timestamp for s in obj.history}
                   | {s.timestamp for r in owns
                      for s in reg.get(r.src).history})

    def holds(t):
        ostate = obj.state_at(t)
        if ostate is None or ostate.position is None:
            return False
        owners = [r.src for r in owns
                  if r.valid_from <= t and (r.valid_to is None or t < r.valid_to)]
        if owners:
            dists = []
            for owner in owners:
                st_ = reg.get(owner).state_at(t)
                if st_ is not None and st_.position is not None:
                    dists.append(math.dist(st_.position[:2], ostate.position[:2]))
            return bool(dists) and min(dists) > cfg.abandon_dist_m
        ever_owned = any(r.valid_from <= t for r in owns)
        return ever_owned and obj.kind == EntityKind.OBJECT_TRACK

    runs = []
    start = None
    prev = None
    for t in times:
        if holds(t):
            if start is None:
                start = t
            prev = t
        else:
            if start is not None and prev - start >= cfg.abandon_min_ms:
                runs.append((start, prev))
            start = None
    if start is not None and prev - start >= cfg.abandon_min_ms:
        runs.append((start, prev))
    return runs


@pytest.mark.parametrize("trial", range(30))
def test_abandon_matches_oracle(trial):
    r = random.Random(7000 + trial)
    cfg = DetectorConfig(abandon_dist_m=r.uniform(5, 15),
                         abandon_min_ms=r.randint(5000, 30000))
    owner = []
    x = 0.0
    for t in range(0, 120000, 1000):
        if r.random() < 0.1:
            x = r.uniform(0, 60)
        owner.append((t, x, 0.0))
    obj = [(t, 0.0, 0.0) for t in range(0, 120000, 4000)]
    reg, graph = build_abandon_world(owner, obj)
    got = [(a.t_start, a.t_end)
           for a in detect_abandoned_object("bag", reg, graph, cfg)]
    assert got == abandon_oracle(reg, graph, cfg)


# --- watchlist ------------------------------------------------------------

def make_watchlist(labels):
    return Watchlist(entries=[
        WatchlistEntry(sid, tuple(unit_vector(f"wl-{sid}"))) for sid in labels])


def test_watchlist_identity_match():
    wl = make_watchlist(["anna", "bert"])
    feature = wl.entries[0].feature
    got = match_watchlist(feature, wl, CFG)
    assert got is not None
    assert got[0] == "anna"
    assert got[1] == pytest.approx(1.0, abs=1e-9)


def test_watchlist_orthogonal_no_match():
    wl = Watchlist(entries=[WatchlistEntry(
        "ortho", tuple([1.0] + [0.0] * 127))])
    probe = [0.0, 1.0] + [0.0] * 126
    assert match_watchlist(probe, wl, CFG) is None


def test_watchlist_bad_norm():
    wl = make_watchlist(["anna"])
    with pytest.raises(InvalidFeatureError):
        match_watchlist([0.5] * 128, wl, CFG)


def test_watchlist_tie_breaks_lexicographic():
    feat = tuple(unit_vector("shared"))
    wl = Watchlist(entries=[WatchlistEntry("zeb", feat),
                            WatchlistEntry("alf", feat)])
    got = match_watchlist(feat, wl, DetectorConfig(face_threshold=0.5))
    assert got[0] == "alf"


@pytest.mark.parametrize("trial", range(40))
def test_watchlist_matches_argmax_oracle(trial):
    r = random.Random(8000 + trial)
    entries = [WatchlistEntry(f"s{i}", tuple(unit_vector(f"rng-{trial}-{i}")))
               for i in range(10)]
    wl = Watchlist(entries=entries)
    probe = unit_vector(f"probe-{trial}")
    if r.random() < 0.5:
        # blend toward one entry so some trials clear the threshold
        target = r.choice(entries).feature
        mix = [0.15 * p + 0.85 * t for p, t in zip(probe, target)]
        norm = math.sqrt(sum(v * v for v in mix))
        probe = [v / norm for v in mix]
    got = match_watchlist(probe, wl, CFG)
    sims = {e.suspect_id: sum(a * b for a, b in zip(probe, e.feature))
            for e in entries}
    best_sim = max(sims.values())
    best_ids = sorted(s for s, v in sims.items() if v == best_sim)
    if best_sim >= CFG.face_threshold:
        assert got == (best_ids[0], best_sim)
    else:
        assert got is None


# --- UXV classification -------------------------------------------------

CRITICAL = [Zone("plaza", [(1000, 1000), (1040, 1000), (1040, 1040),
                           (1000, 1040)], ["critical"])]


def test_uxv_straight_modal_benign():
    # USV at exactly modal speed, straight line, far from critical zones
    samples = track([(i * 1000, 5.0 * i, 0.0) for i in range(20)])
    score, label = classify_uxv_track(EntityKind.USV, samples, CRITICAL, CFG)
    assert score == pytest.approx(1.0 / (1.0 + math.exp(2.0)), abs=1e-12)
    assert label == "benign"


def test_uxv_erratic_near_zone():
    # f_zone=1 and fully erratic headings but modal mean speed -> f=(1,1,0)
    near = [Zone("plaza", [(100, 100), (140, 100), (140, 140), (100, 140)],
                 ["critical"])]
    pts = []
    t = 0
    x, y = 110.0, 110.0
    r = random.Random(3)
    for i in range(200):
        t += 1000
        ang = r.uniform(0, 2 * math.pi)
        x += 10.0 * math.cos(ang)
        y += 10.0 * math.sin(ang)
        pts.append((t, x, y))
    samples = track(pts)
    score, label = classify_uxv_track(EntityKind.UAV, samples, near, CFG)
    # fully random headings: resultant ~ 0 -> f_heading ~ 1; speed modal
    assert score == pytest.approx(1.0 / (1.0 + math.exp(-1.0)), abs=0.05)
    assert label == "suspicious"


def test_uxv_too_few_samples():
    with pytest.raises(TooFewSamplesError):
        classify_uxv_track(EntityKind.UAV, track([(0, 0, 0), (1000, 1, 1)]),
                           [], CFG)


def test_uxv_wrong_kind():
    with pytest.raises(WrongKindError):
        classify_uxv_track(EntityKind.PERSON_TRACK,
                           track([(0, 0, 0), (1000, 1, 1), (2000, 2, 2)]),
                           [], CFG)


def test_uxv_monotone_in_features():
    """Logistic with non-negative weights: nudging any feature up never
    lowers the score. Verified through the weight-space interpretation."""
    samples = track([(i * 1000, 5.0 * i, 0.0) for i in range(10)])
    base, _ = classify_uxv_track(EntityKind.USV, samples, [], CFG)
    near = [Zone("z", [(0, -5), (50, -5), (50, 5), (0, 5)], ["critical"])]
    with_zone, _ = classify_uxv_track(EntityKind.USV, samples, near, CFG)
    assert with_zone >= base
    slow = track([(i * 1000, 2.0 * i, 0.0) for i in range(10)])  # off-modal
    off_speed, _ = classify_uxv_track(EntityKind.USV, slow, [], CFG)
    assert off_speed >= base


# --- mobile recon / bursts ---------------------------------------------

DAY = 86_400_000
TARGETS = [Zone("site", [(0, 0), (100, 0), (100, 100), (0, 100)], ["critical"])]
CELLS = {"near": (50.0, 50.0, 0.0), "far": (5000.0, 5000.0, 0.0)}


def test_recon_single_day_no_alert():
    events = [(1 * DAY, "near", "register")]
    assert detect_mobile_recon("dev", events, TARGETS, CELLS, CFG) == []


def test_recon_three_days_alert():
    events = [(1 * DAY, "near", "register"),
              (5 * DAY, "near", "register"),
              (9 * DAY, "near", "register")]
    alerts = detect_mobile_recon("dev", events, TARGETS, CELLS, CFG)
    assert [a.kind for a in alerts] == [AlertKind.MOBILE_RECON]
    assert alerts[0].severity == 0.8
    assert alerts[0].evidence["days"] == "1,5,9"
    assert alerts[0].t_end == 9 * DAY


def test_recon_far_cell_ignored():
    events = [(d * DAY, "far", "register") for d in (1, 2, 3)]
    assert detect_mobile_recon("dev", events, TARGETS, CELLS, CFG) == []


def test_recon_window_limits_days():
    cfg = DetectorConfig(recon_window_days=5)
    events = [(1 * DAY, "near", "register"),
              (10 * DAY, "near", "register"),
              (20 * DAY, "near", "register")]
    assert detect_mobile_recon("dev", events, TARGETS, CELLS, cfg) == []


def test_burst_five_calls_in_four_minutes():
    t0 = 1000
    events = [(t0 + i * 60000, "far", "call") for i in range(5)]
    alerts = detect_mobile_recon("dev", events, TARGETS, CELLS, CFG)
    assert [a.kind for a in alerts] == [AlertKind.COMMS_BURST]
    assert alerts[0].severity == 0.6
    assert alerts[0].t_start == t0
    assert alerts[0].t_end == t0 + 4 * 60000


def test_burst_sliding_window_oracle():
    r = random.Random(77)
    for _ in range(30):
        times = sorted(r.randint(0, 3_000_000) for _ in range(r.randint(0, 25)))
        events = [(t, "far", "call") for t in times]
        alerts = detect_mobile_recon("dev", events, TARGETS, CELLS, CFG)
        # oracle: greedy scan with consumption
        want = []
        pending = []
        for t in times:
            pending.append(t)
            pending = [p for p in pending if t - p <= CFG.burst_window_ms]
            if len(pending) >= CFG.burst_count_m:
                want.append((pending[0], t))
                pending = []
        assert [(a.t_start, a.t_end) for a in alerts] == want


def test_recon_unordered_rejected():
    with pytest.raises(UnorderedEventsError):
        detect_mobile_recon("dev", [(100, "near", "call"), (50, "near", "call")],
                            TARGETS, CELLS, CFG)


# --- cyber text -----------------------------------------------------------

LEX = [("bomb", 0.5), ("detonator", 0.4), ("market", 0.2)]


def test_cyber_no_match():
    score, matched = score_cyber_text("lovely weather today", LEX)
    assert score == 0.0 and matched == []


def test_cyber_single_term():
    score, matched = score_cyber_text("the Bomb!", LEX)
    assert score == pytest.approx(0.5)
    assert matched == ["bomb"]


def test_cyber_noisy_or_two_terms():
    score, matched = score_cyber_text("bomb with a detonator", LEX)
    assert score == pytest.approx(1 - 0.5 * 0.6)
    assert sorted(matched) == ["bomb", "detonator"]


def test_cyber_whole_word_only():
    score, matched = score_cyber_text("bombastic remarks", LEX)
    assert score == 0.0


def test_cyber_multiword_term():
    lex = [("3d printed", 0.5)]
    score, matched = score_cyber_text("selling 3D-printed parts", lex)
    assert matched == ["3d printed"]  # punctuation stripped, tokens adjacent
    score2, matched2 = score_cyber_text("3d things, printed later", lex)
    assert matched2 == []


def test_cyber_duplicate_matches_count_once():
    score, _ = score_cyber_text("bomb bomb bomb", LEX)
    assert score == pytest.approx(0.5)


def test_cyber_empty_lexicon():
    with pytest.raises(EmptyLexiconError):
        score_cyber_text("anything", [])


def test_cyber_bad_weight():
    with pytest.raises(ValueError):
        score_cyber_text("anything", [("term", 1.5)])


@given(st.sets(st.sampled_from(["bomb", "detonator", "market", "usv", "pier"]),
               max_size=5))
@settings(max_examples=100, deadline=None)
def test_cyber_monotone_in_matches(terms):
    lex = [("bomb", 0.5), ("detonator", 0.4), ("market", 0.2),
           ("usv", 0.3), ("pier", 0.1)]
    text = " ".join(sorted(terms))
    score, matched = score_cyber_text(text or "nothing", lex)
    assert 0.0 <= score <= 1.0
    assert set(matched) == terms
    for extra in set(t for t, _ in lex) - terms:
        bigger, _ = score_cyber_text(f"{text} {extra}", lex)
        assert bigger >= score


def test_load_lexicon(tmp_path):
    path = tmp_path / "lex.csv"
    path.write_text("# comment\nbomb,0.5\n3d printed,0.4\n\n", encoding="utf-8")
    assert load_lexicon(path) == [("bomb", 0.5), ("3d printed", 0.4)]
    bad = tmp_path / "bad.csv"
    bad.write_text("term,2.0\n", encoding="utf-8")
    with pytest.raises(ValueError):
        load_lexicon(bad)
