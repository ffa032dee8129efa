"""Single-entity surrogate detectors: one entity's history in, alerts out.

Every detector is a pure function of (inputs, config). Numeric defaults
live in DetectorConfig and can be overridden per scenario.
"""

import math
import re
from collections import deque
from dataclasses import dataclass, field, fields, replace
from enum import Enum
from typing import Optional

import numpy as np

from dtss import kernels
from dtss.errors import (
    EmptyLexiconError,
    TooFewSamplesError,
    UnorderedEventsError,
    UnorderedTrackError,
    WrongKindError,
)
from dtss.geometry import Zone
from dtss.ingest import Watchlist, check_feature
from dtss.twin import EntityKind, EntityState

MS_PER_DAY = 86_400_000

MODAL_SPEED_MPS = {
    EntityKind.UAV: 10.0,
    EntityKind.USV: 5.0,
    EntityKind.UUV: 2.0,
}


class AlertKind(str, Enum):
    LOITERING = "LOITERING"
    ABANDONED_OBJECT = "ABANDONED_OBJECT"
    WATCHLIST_MATCH = "WATCHLIST_MATCH"
    SUSPICIOUS_UXV = "SUSPICIOUS_UXV"
    MOBILE_RECON = "MOBILE_RECON"
    COMMS_BURST = "COMMS_BURST"
    CYBER_INDICATOR = "CYBER_INDICATOR"


@dataclass(frozen=True)
class Alert:
    alert_id: str
    kind: AlertKind
    severity: float
    entity_ids: tuple[str, ...]
    t_start: int
    t_end: int
    evidence: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.t_start > self.t_end:
            raise ValueError(f"alert t_start {self.t_start} > t_end {self.t_end}")
        if not 0.0 <= self.severity <= 1.0:
            raise ValueError(f"alert severity {self.severity} outside [0,1]")
        if not self.entity_ids:
            raise ValueError("alert needs at least one entity id")


@dataclass(frozen=True)
class DetectorConfig:
    loiter_radius_m: float = 5.0
    loiter_min_ms: int = 300_000
    abandon_dist_m: float = 10.0
    abandon_min_ms: int = 60_000
    face_threshold: float = 0.8
    uxv_threshold: float = 0.5
    uxv_w_zone: float = 2.0
    uxv_w_heading: float = 1.0
    uxv_w_speed: float = 1.0
    uxv_bias: float = 2.0
    recon_days_k: int = 3
    recon_window_days: int = 30
    recon_radius_m: float = 150.0
    burst_count_m: int = 5
    burst_window_ms: int = 600_000
    cyber_threshold: float = 0.6

    def with_overrides(self, overrides: dict) -> "DetectorConfig":
        known = {f.name for f in fields(self)}
        bad = set(overrides) - known
        if bad:
            raise ValueError(f"unknown detector config keys: {sorted(bad)}")
        return replace(self, **overrides)


def _check_track_order(track) -> None:
    for a, b in zip(track, track[1:]):
        if b.timestamp <= a.timestamp:
            raise UnorderedTrackError(
                f"track timestamps must strictly increase "
                f"({a.timestamp} -> {b.timestamp})")


def detect_loitering(entity_id: str, track: list[EntityState],
                     cfg: DetectorConfig) -> list[Alert]:
    """Alerts for maximal dwell windows around a window-anchor sample.

    A window anchored at sample i covers all consecutive samples staying
    within loiter_radius_m of sample i; it qualifies when it spans at
    least loiter_min_ms and no earlier qualifying window reaches at least
    as far.
    """
    _check_track_order(track)
    samples = [s for s in track if s.position is not None]
    if len(samples) < 2:
        return []
    ts = np.asarray([s.timestamp for s in samples], dtype=np.int64)
    xs = np.asarray([s.position[0] for s in samples], dtype=np.float64)
    ys = np.asarray([s.position[1] for s in samples], dtype=np.float64)
    windows = kernels.loiter_windows(ts, xs, ys, float(cfg.loiter_radius_m),
                                     int(cfg.loiter_min_ms))
    out = []
    for a_idx, b_idx in windows:
        a = int(ts[a_idx])
        b = int(ts[b_idx])
        dwell = b - a
        out.append(Alert(
            alert_id=f"loiter-{entity_id}-{a}",
            kind=AlertKind.LOITERING,
            severity=min(1.0, dwell / (2.0 * cfg.loiter_min_ms)),
            entity_ids=(entity_id,),
            t_start=a, t_end=b,
            evidence={"anchor_x": float(xs[a_idx]), "anchor_y": float(ys[a_idx]),
                      "dwell_ms": dwell},
        ))
    return out


def _xy_dist(p, q) -> float:
    dx = p[0] - q[0]
    dy = p[1] - q[1]
    return math.sqrt(dx * dx + dy * dy)


def abandonment_condition(registry, owns: list, obj, t: int,
                          cfg: DetectorConfig):
    """Separated/orphaned test against twin state at time t.

    Returns (holds, owner_id, separation_m): separated when some owner has
    a known position and none is within abandon_dist_m; orphaned when a
    previously-owned ObjectTrack has no valid owner at t.
    """
    obj_state = obj.state_at(t)
    if obj_state is None or obj_state.position is None:
        return False, None, 0.0
    valid_owners = [r.src for r in owns if r.valid_at(t)]
    if valid_owners:
        best_owner = None
        max_sep = 0.0
        any_positioned = False
        for owner_id in valid_owners:
            st = registry.get(owner_id).state_at(t)
            if st is None or st.position is None:
                continue
            any_positioned = True
            d = _xy_dist(st.position, obj_state.position)
            if d > max_sep:
                max_sep = d
                best_owner = owner_id
            if d <= cfg.abandon_dist_m:
                return False, None, 0.0
        if not any_positioned:
            return False, None, 0.0
        return True, best_owner, max_sep
    first_owned = min((r.valid_from for r in owns), default=None)
    if (obj.kind == EntityKind.OBJECT_TRACK and first_owned is not None
            and t >= first_owned):
        return True, None, 0.0
    return False, None, 0.0


def detect_abandoned_object(object_id: str, registry, graph,
                            cfg: DetectorConfig,
                            zones: Optional[list[Zone]] = None) -> list[Alert]:
    """Alerts for maximal spans where an object sits away from every owner.

    The separation condition is sampled at the union of the object's and
    owners' state timestamps. Severity is 0.7, or 1.0 if the object lies
    in a critical zone at any sample of the span.
    """
    obj = registry.get(object_id)
    zones = zones or []
    owns = [r for r in graph.all_relations()
            if r.kind.value == "OWNS" and r.dst == object_id]
    times = {s.timestamp for s in obj.history}
    for rel in owns:
        owner = registry.get(rel.src)
        times.update(s.timestamp for s in owner.history)
    times = sorted(times)

    def condition(t: int):
        return abandonment_condition(registry, owns, obj, t, cfg)

    out = []
    run_start = None
    run_owner = None
    run_sep = 0.0
    run_critical = False
    prev_t = None

    def close_run(end_t):
        if run_start is None or end_t is None:
            return
        if end_t - run_start >= cfg.abandon_min_ms:
            evidence = {"max_separation_m": run_sep}
            if run_owner is not None:
                evidence["owner_id"] = run_owner
            out.append(Alert(
                alert_id=f"abandon-{object_id}-{run_start}",
                kind=AlertKind.ABANDONED_OBJECT,
                severity=1.0 if run_critical else 0.7,
                entity_ids=(object_id,) if run_owner is None else (object_id, run_owner),
                t_start=run_start, t_end=end_t,
                evidence=evidence,
            ))

    for t in times:
        holds, owner, sep = condition(t)
        if holds:
            if run_start is None:
                run_start = t
                run_owner = owner
                run_sep = sep
                run_critical = False
            else:
                if sep > run_sep:
                    run_sep = sep
                    run_owner = owner if owner is not None else run_owner
            state = obj.state_at(t)
            if state is not None and state.position is not None:
                x, y = state.position[0], state.position[1]
                if any(z.is_critical and z.contains(x, y) for z in zones):
                    run_critical = True
            prev_t = t
        else:
            close_run(prev_t)
            run_start = None
            run_owner = None
            run_sep = 0.0
            run_critical = False
            prev_t = t
    close_run(prev_t)
    return out


def match_watchlist(feature, watchlist: Watchlist,
                    cfg: DetectorConfig) -> Optional[tuple[str, float]]:
    """Best watchlist entry by cosine similarity, if above threshold.

    Both sides are unit-norm so similarity is the plain dot product; ties
    resolve to the lexicographically smallest suspect_id.
    """
    check_feature(feature)
    best: Optional[tuple[str, float]] = None
    for entry in watchlist.entries:
        sim = sum(float(a) * float(b) for a, b in zip(feature, entry.feature))
        if best is None or sim > best[1] or (sim == best[1] and entry.suspect_id < best[0]):
            best = (entry.suspect_id, sim)
    if best is not None and best[1] >= cfg.face_threshold:
        return best
    return None


def watchlist_alert(subject_id: str, match: tuple[str, float], t: int,
                    dedup: str, extra: Optional[dict] = None) -> Alert:
    suspect_id, sim = match
    sev = min(1.0, max(0.0, sim))
    evidence = {"suspect_id": suspect_id, "similarity": sim}
    if extra:
        evidence.update(extra)
    return Alert(alert_id=f"wlmatch-{subject_id}-{t}-{dedup}",
                 kind=AlertKind.WATCHLIST_MATCH, severity=sev,
                 entity_ids=(subject_id,), t_start=t, t_end=t,
                 evidence=evidence)


def classify_uxv_track(kind: EntityKind, track: list[EntityState],
                       zones: list[Zone],
                       cfg: DetectorConfig) -> tuple[float, str]:
    """Score an unmanned-vehicle track as benign/suspicious.

    Features: proximity to a critical zone, circular variance of the
    heading sequence, and deviation of mean speed from the modal speed
    for the vehicle kind; combined through a logistic with non-negative
    weights so the score is monotone in each feature.
    """
    if kind not in MODAL_SPEED_MPS:
        raise WrongKindError(f"kind {kind.value} is not a UAV/USV/UUV")
    _check_track_order(track)
    samples = [s for s in track if s.position is not None]
    if len(samples) < 3:
        raise TooFewSamplesError(
            f"need >= 3 positioned samples, got {len(samples)}")

    critical = [z for z in zones if z.is_critical]
    f_zone = 0.0
    for s in samples:
        if any(z.distance_to(s.position[0], s.position[1]) <= cfg.recon_radius_m
               for z in critical):
            f_zone = 1.0
            break

    cos_sum = 0.0
    sin_sum = 0.0
    n_headings = 0
    path_len = 0.0
    for a, b in zip(samples, samples[1:]):
        dx = b.position[0] - a.position[0]
        dy = b.position[1] - a.position[1]
        d = math.sqrt(dx * dx + dy * dy)
        path_len += d
        if d > 0.0:
            cos_sum += dx / d
            sin_sum += dy / d
            n_headings += 1
    if n_headings > 0:
        resultant = math.sqrt(cos_sum * cos_sum + sin_sum * sin_sum) / n_headings
        f_heading = 1.0 - resultant
    else:
        f_heading = 0.0

    duration_s = (samples[-1].timestamp - samples[0].timestamp) / 1000.0
    mean_speed = path_len / duration_s if duration_s > 0 else 0.0
    modal = MODAL_SPEED_MPS[kind]
    f_speed = min(1.0, abs(mean_speed - modal) / modal)

    x = (cfg.uxv_w_zone * f_zone + cfg.uxv_w_heading * f_heading
         + cfg.uxv_w_speed * f_speed - cfg.uxv_bias)
    score = 1.0 / (1.0 + math.exp(-x))
    label = "suspicious" if score >= cfg.uxv_threshold else "benign"
    return score, label


def detect_mobile_recon(device_id: str, events: list[tuple[int, str, str]],
                        target_zones: list[Zone],
                        cell_positions: dict[str, tuple],
                        cfg: DetectorConfig) -> list[Alert]:
    """Recon-visit and call-burst alerts from one device's network events.

    Events are (timestamp_ms, cell_id, event) triples in time order. A
    visit counts when the event's cell sits within recon_radius_m of a
    target zone; MOBILE_RECON fires once, at the first event that brings
    the distinct-day count within the day window to recon_days_k.
    COMMS_BURST fires whenever burst_count_m calls land inside a sliding
    burst_window_ms window; the calls of a burst are consumed.
    """
    for a, b in zip(events, events[1:]):
        if b[0] < a[0]:
            raise UnorderedEventsError(
                f"events must be time-ordered ({a[0]} -> {b[0]})")

    near_cells = {}
    for cell_id, pos in cell_positions.items():
        near_cells[cell_id] = any(
            z.distance_to(pos[0], pos[1]) <= cfg.recon_radius_m
            for z in target_zones)

    out: list[Alert] = []
    day_first_event: dict[int, int] = {}
    recon_emitted = False
    calls: deque = deque()
    window_days = int(cfg.recon_window_days)

    for t, cell_id, event in events:
        if not recon_emitted and near_cells.get(cell_id, False):
            day = t // MS_PER_DAY
            day_first_event.setdefault(day, t)
            in_window = sorted(d for d in day_first_event
                               if day - window_days < d <= day)
            if len(in_window) >= cfg.recon_days_k:
                qual = in_window[-cfg.recon_days_k:]
                out.append(Alert(
                    alert_id=f"recon-{device_id}-{day}",
                    kind=AlertKind.MOBILE_RECON,
                    severity=0.8,
                    entity_ids=(device_id,),
                    t_start=day_first_event[qual[0]], t_end=t,
                    evidence={"days": ",".join(str(d) for d in in_window),
                              "visit_count": len(in_window)},
                ))
                recon_emitted = True
        if event == "call":
            calls.append(t)
            while calls and t - calls[0] > cfg.burst_window_ms:
                calls.popleft()
            if len(calls) >= cfg.burst_count_m:
                out.append(Alert(
                    alert_id=f"burst-{device_id}-{calls[0]}",
                    kind=AlertKind.COMMS_BURST,
                    severity=0.6,
                    entity_ids=(device_id,),
                    t_start=calls[0], t_end=t,
                    evidence={"call_count": len(calls),
                              "window_ms": t - calls[0]},
                ))
                calls.clear()
    out.sort(key=lambda a: (a.t_end, a.alert_id))
    return out


_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)


def _tokenize(text: str) -> list[str]:
    return _TOKEN_RE.findall(text.lower())


def score_cyber_text(text: str, lexicon: list[tuple[str, float]]
                     ) -> tuple[float, list[str]]:
    """Noisy-OR threat score over whole-word lexicon matches.

    Matching is case-insensitive after punctuation stripping; multi-word
    terms match as contiguous token runs. Each distinct matched term
    contributes its weight once: score = 1 - prod(1 - w_i).
    """
    if not lexicon:
        raise EmptyLexiconError("lexicon must not be empty")
    for term, weight in lexicon:
        if not 0.0 < weight <= 1.0:
            raise ValueError(f"lexicon weight for {term!r} outside (0,1]: {weight}")
    tokens = _tokenize(text)
    matched = []
    miss_prod = 1.0
    seen = set()
    for term, weight in lexicon:
        if term in seen:
            continue
        seen.add(term)
        term_tokens = _tokenize(term)
        if not term_tokens:
            continue
        n = len(term_tokens)
        hit = any(tokens[i:i + n] == term_tokens
                  for i in range(len(tokens) - n + 1))
        if hit:
            matched.append(term)
            miss_prod *= (1.0 - weight)
    return 1.0 - miss_prod, matched


def load_lexicon(path) -> list[tuple[str, float]]:
    """Read a `term,weight` CSV lexicon; `#` starts a comment line."""
    out = []
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            term, sep, weight = line.rpartition(",")
            if not sep or not term:
                raise ValueError(f"{path}:{line_no}: expected 'term,weight'")
            try:
                w = float(weight)
            except ValueError:
                raise ValueError(f"{path}:{line_no}: bad weight {weight!r}") from None
            if not 0.0 < w <= 1.0:
                raise ValueError(f"{path}:{line_no}: weight outside (0,1]: {w}")
            out.append((term.strip(), w))
    if not out:
        raise EmptyLexiconError(f"lexicon {path} has no entries")
    return out
