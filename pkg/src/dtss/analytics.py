"""Online analytic pipeline used by the simulation engine.

The pure detector functions in `detectors` define pattern semantics over
complete histories; a live run needs alerts as soon as a pattern first
qualifies. The trackers here are their streaming counterparts with
first-satisfaction emission: an alert is emitted at the earliest sim time
its pattern qualifies, with t_start at the pattern start and t_end at the
qualification time. The UXV tracker keeps incremental aggregates that
reproduce the pure classifier's score bit-for-bit on the same samples.
"""

import math
from collections import deque
from typing import Optional

from dtss.detectors import (
    Alert,
    AlertKind,
    DetectorConfig,
    MODAL_SPEED_MPS,
    MS_PER_DAY,
    abandonment_condition,
    match_watchlist,
    score_cyber_text,
    watchlist_alert,
)
from dtss.geometry import Zone
from dtss.ingest import Modality, ObservationRecord, Watchlist
from dtss.twin import EntityKind, WorldRegistry


class OnlineLoiterTracker:
    """Anchored dwell tracking over one entity's observed positions.

    Streaming counterpart of the offline maximal-window detector: samples
    accumulate around an anchor; when one leaves the dwell ball the window
    re-anchors at the earliest buffered sample whose suffix still fits
    (so an unlucky walk-in anchor cannot eat a genuine dwell). Emission is
    first-satisfaction: once the window spans loiter_min_ms.
    """

    def __init__(self, entity_id: str, cfg: DetectorConfig):
        self.entity_id = entity_id
        self.cfg = cfg
        self.anchor: Optional[tuple[int, float, float]] = None
        self.window: list[tuple[int, float, float]] = []
        self.emitted = False

    def _fits(self, ax: float, ay: float, x: float, y: float) -> bool:
        dx = x - ax
        dy = y - ay
        return math.sqrt(dx * dx + dy * dy) <= self.cfg.loiter_radius_m

    def _hit(self, t: int) -> dict:
        at, ax, ay = self.anchor
        self.emitted = True
        self.window = []
        return {"t_start": at, "t_end": t, "anchor_x": ax, "anchor_y": ay,
                "dwell_ms": t - at}

    def on_sample(self, t: int, x: float, y: float) -> Optional[dict]:
        if self.anchor is None:
            self.anchor = (t, x, y)
            self.window = [(t, x, y)]
            self.emitted = False
            return None
        if self._fits(self.anchor[1], self.anchor[2], x, y):
            if self.emitted:
                return None
            self.window.append((t, x, y))
            if t - self.anchor[0] >= self.cfg.loiter_min_ms:
                return self._hit(t)
            return None
        if self.emitted:
            self.anchor = (t, x, y)
            self.window = [(t, x, y)]
            self.emitted = False
            return None
        # Ball broken before qualifying: re-anchor at the earliest buffered
        # sample that still covers everything after it (including this one).
        self.window.append((t, x, y))
        w = self.window
        for i in range(1, len(w)):
            ax, ay = w[i][1], w[i][2]
            if all(self._fits(ax, ay, w[j][1], w[j][2])
                   for j in range(i + 1, len(w))):
                self.anchor = w[i]
                self.window = w[i:]
                if t - self.anchor[0] >= self.cfg.loiter_min_ms:
                    return self._hit(t)
                return None
        return None


class OnlineUxvTracker:
    """Incremental unmanned-vehicle scoring; emits once when suspicious."""

    def __init__(self, entity_id: str, kind: EntityKind, cfg: DetectorConfig,
                 critical_zones: list[Zone]):
        self.entity_id = entity_id
        self.kind = kind
        self.cfg = cfg
        self.critical_zones = critical_zones
        self.n_samples = 0
        self.first_ts: Optional[int] = None
        self.last_ts: Optional[int] = None
        self.last_xy: Optional[tuple[float, float]] = None
        self.cos_sum = 0.0
        self.sin_sum = 0.0
        self.n_headings = 0
        self.path_len = 0.0
        self.f_zone = 0.0
        self.emitted = False

    def on_sample(self, t: int, x: float, y: float) -> None:
        if self.first_ts is None:
            self.first_ts = t
        if self.last_xy is not None:
            dx = x - self.last_xy[0]
            dy = y - self.last_xy[1]
            d = math.sqrt(dx * dx + dy * dy)
            self.path_len += d
            if d > 0.0:
                self.cos_sum += dx / d
                self.sin_sum += dy / d
                self.n_headings += 1
        self.last_xy = (x, y)
        self.last_ts = t
        self.n_samples += 1
        if self.f_zone == 0.0:
            if any(z.distance_to(x, y) <= self.cfg.recon_radius_m
                   for z in self.critical_zones):
                self.f_zone = 1.0

    def score(self) -> Optional[tuple[float, float, float, float]]:
        """(score, f_zone, f_heading, f_speed) when scoreable (>= 3 samples)."""
        if self.n_samples < 3:
            return None
        if self.n_headings > 0:
            resultant = math.sqrt(self.cos_sum * self.cos_sum
                                  + self.sin_sum * self.sin_sum) / self.n_headings
            f_heading = 1.0 - resultant
        else:
            f_heading = 0.0
        duration_s = (self.last_ts - self.first_ts) / 1000.0
        mean_speed = self.path_len / duration_s if duration_s > 0 else 0.0
        modal = MODAL_SPEED_MPS[self.kind]
        f_speed = min(1.0, abs(mean_speed - modal) / modal)
        cfg = self.cfg
        x = (cfg.uxv_w_zone * self.f_zone + cfg.uxv_w_heading * f_heading
             + cfg.uxv_w_speed * f_speed - cfg.uxv_bias)
        return 1.0 / (1.0 + math.exp(-x)), self.f_zone, f_heading, f_speed

    def decide(self) -> Optional[dict]:
        if self.emitted:
            return None
        scored = self.score()
        if scored is None:
            return None
        score, f_zone, f_heading, f_speed = scored
        if score >= self.cfg.uxv_threshold:
            self.emitted = True
            return {"score": score, "f_zone": f_zone, "f_heading": f_heading,
                    "f_speed": f_speed, "t_start": self.first_ts,
                    "t_end": self.last_ts, "x": self.last_xy[0],
                    "y": self.last_xy[1]}
        return None


class OnlineMobileTracker:
    """Per-device recon-day and call-burst tracking (streaming form of
    detect_mobile_recon; equality with the pure function is tested)."""

    def __init__(self, device_id: str, cfg: DetectorConfig,
                 near_cells: dict[str, bool],
                 cell_positions: dict[str, tuple]):
        self.device_id = device_id
        self.cfg = cfg
        self.near_cells = near_cells
        self.cell_positions = cell_positions
        self.day_first_event: dict[int, int] = {}
        self.recon_emitted = False
        self.calls: deque = deque()

    def on_event(self, t: int, cell_id: str, event: str) -> list[Alert]:
        out = []
        cfg = self.cfg
        pos = self.cell_positions.get(cell_id)
        if not self.recon_emitted and self.near_cells.get(cell_id, False):
            day = t // MS_PER_DAY
            self.day_first_event.setdefault(day, t)
            in_window = sorted(d for d in self.day_first_event
                               if day - cfg.recon_window_days < d <= day)
            if len(in_window) >= cfg.recon_days_k:
                qual = in_window[-cfg.recon_days_k:]
                evidence = {"days": ",".join(str(d) for d in in_window),
                            "visit_count": len(in_window)}
                if pos is not None:
                    evidence["x"] = pos[0]
                    evidence["y"] = pos[1]
                out.append(Alert(
                    alert_id=f"recon-{self.device_id}-{day}",
                    kind=AlertKind.MOBILE_RECON, severity=0.8,
                    entity_ids=(self.device_id,),
                    t_start=self.day_first_event[qual[0]], t_end=t,
                    evidence=evidence))
                self.recon_emitted = True
        if event == "call":
            self.calls.append(t)
            while self.calls and t - self.calls[0] > cfg.burst_window_ms:
                self.calls.popleft()
            if len(self.calls) >= cfg.burst_count_m:
                evidence = {"call_count": len(self.calls),
                            "window_ms": t - self.calls[0]}
                if pos is not None:
                    evidence["x"] = pos[0]
                    evidence["y"] = pos[1]
                out.append(Alert(
                    alert_id=f"burst-{self.device_id}-{self.calls[0]}",
                    kind=AlertKind.COMMS_BURST, severity=0.6,
                    entity_ids=(self.device_id,),
                    t_start=self.calls[0], t_end=t,
                    evidence=evidence))
                self.calls.clear()
        return out


class OnlineAbandonWatcher:
    """Tick-sampled abandonment watch for one object entity."""

    def __init__(self, object_id: str, cfg: DetectorConfig, zones: list[Zone]):
        self.object_id = object_id
        self.cfg = cfg
        self.zones = zones
        self.run_start: Optional[int] = None
        self.run_owner: Optional[str] = None
        self.run_sep = 0.0
        self.run_critical = False
        self.emitted = False

    def on_tick(self, t: int, registry: WorldRegistry, owns: list) -> Optional[dict]:
        try:
            obj = registry.get(self.object_id)
        except Exception:
            return None
        holds, owner, sep = abandonment_condition(registry, owns, obj, t, self.cfg)
        if not holds:
            self.run_start = None
            self.run_owner = None
            self.run_sep = 0.0
            self.run_critical = False
            self.emitted = False
            return None
        if self.run_start is None:
            self.run_start = t
        if sep > self.run_sep:
            self.run_sep = sep
            self.run_owner = owner if owner is not None else self.run_owner
        elif self.run_owner is None and owner is not None:
            self.run_owner = owner
        state = obj.state_at(t)
        if state is not None and state.position is not None:
            x, y = state.position[0], state.position[1]
            if any(z.is_critical and z.contains(x, y) for z in self.zones):
                self.run_critical = True
        if not self.emitted and t - self.run_start >= self.cfg.abandon_min_ms:
            self.emitted = True
            pos = state.position if state is not None else None
            return {"t_start": self.run_start, "t_end": t,
                    "owner_id": self.run_owner,
                    "max_separation_m": self.run_sep,
                    "critical": self.run_critical,
                    "x": pos[0] if pos else None,
                    "y": pos[1] if pos else None}
        return None


class AnalyticsPipeline:
    """Feeds routed observations to the online trackers and collects alerts."""

    def __init__(self, registry: WorldRegistry, zones: list[Zone],
                 watchlist: Watchlist, lexicon: list[tuple[str, float]],
                 cfg: DetectorConfig,
                 cell_positions: dict[str, tuple]):
        self.registry = registry
        self.zones = zones
        self.critical_zones = [z for z in zones if z.is_critical]
        self.watchlist = watchlist
        self.lexicon = lexicon
        self.cfg = cfg
        self.cell_positions = cell_positions
        self.near_cells = {
            cid: any(z.distance_to(pos[0], pos[1]) <= cfg.recon_radius_m
                     for z in self.critical_zones)
            for cid, pos in cell_positions.items()}
        self.alerts: list[Alert] = []
        self._loiter: dict[str, OnlineLoiterTracker] = {}
        self._uxv: dict[str, OnlineUxvTracker] = {}
        self._mobile: dict[str, OnlineMobileTracker] = {}
        self._abandon: dict[str, OnlineAbandonWatcher] = {}
        self._wl_seen: set = set()

    def zone_id_at(self, x, y) -> Optional[str]:
        if x is None or y is None:
            return None
        for z in self.zones:
            if z.contains(x, y):
                return z.zone_id
        return None

    def _decorate(self, evidence: dict) -> dict:
        zid = self.zone_id_at(evidence.get("x"), evidence.get("y"))
        if zid is not None:
            evidence["zone_id"] = zid
        return evidence

    def on_observation(self, rec: ObservationRecord) -> None:
        if rec.modality is Modality.FACE_CAPTURE:
            self._on_face(rec)
            return
        if rec.modality is Modality.CYBER_POST:
            self._on_cyber(rec)
            return
        if rec.modality is Modality.MOBILE_NETWORK_EVENT:
            self._on_mobile(rec)
            return
        if rec.subject_id is None or rec.position is None:
            return
        kind_name = rec.payload.get("kind")
        if kind_name is None:
            return
        kind = EntityKind(kind_name)
        t, x, y = rec.timestamp_ms, rec.position[0], rec.position[1]
        if kind is EntityKind.PERSON_TRACK:
            tracker = self._loiter.get(rec.subject_id)
            if tracker is None:
                tracker = OnlineLoiterTracker(rec.subject_id, self.cfg)
                self._loiter[rec.subject_id] = tracker
            hit = tracker.on_sample(t, x, y)
            if hit is not None:
                dwell = hit["dwell_ms"]
                evidence = self._decorate({
                    "anchor_x": hit["anchor_x"], "anchor_y": hit["anchor_y"],
                    "dwell_ms": dwell, "x": hit["anchor_x"], "y": hit["anchor_y"]})
                self.alerts.append(Alert(
                    alert_id=f"loiter-{rec.subject_id}-{hit['t_start']}",
                    kind=AlertKind.LOITERING,
                    severity=min(1.0, dwell / (2.0 * self.cfg.loiter_min_ms)),
                    entity_ids=(rec.subject_id,),
                    t_start=hit["t_start"], t_end=hit["t_end"],
                    evidence=evidence))
        elif kind.is_uxv:
            tracker = self._uxv.get(rec.subject_id)
            if tracker is None:
                tracker = OnlineUxvTracker(rec.subject_id, kind, self.cfg,
                                           self.critical_zones)
                self._uxv[rec.subject_id] = tracker
            tracker.on_sample(t, x, y)

    def _on_face(self, rec: ObservationRecord) -> None:
        if not self.watchlist.entries or rec.subject_id is None:
            return
        match = match_watchlist(rec.payload["feature"], self.watchlist, self.cfg)
        if match is None:
            return
        dedup_key = (rec.subject_id, match[0])
        if dedup_key in self._wl_seen:
            return
        self._wl_seen.add(dedup_key)
        extra = {}
        if rec.position is not None:
            extra = self._decorate({"x": rec.position[0], "y": rec.position[1]})
        self.alerts.append(watchlist_alert(
            rec.subject_id, match, rec.timestamp_ms,
            dedup=str(rec.seq), extra=extra))

    def _on_cyber(self, rec: ObservationRecord) -> None:
        if not self.lexicon:
            return
        score, matched = score_cyber_text(rec.payload["text"], self.lexicon)
        if score >= self.cfg.cyber_threshold:
            self.alerts.append(Alert(
                alert_id=f"cyber-{rec.source_id}-{rec.timestamp_ms}-{rec.seq}",
                kind=AlertKind.CYBER_INDICATOR, severity=score,
                entity_ids=(rec.source_id,),
                t_start=rec.timestamp_ms, t_end=rec.timestamp_ms,
                evidence={"matched_terms": ",".join(sorted(matched)),
                          "platform": str(rec.payload.get("platform", ""))}))

    def _on_mobile(self, rec: ObservationRecord) -> None:
        device_id = f"imsi-{rec.payload['imsi']}"
        tracker = self._mobile.get(device_id)
        if tracker is None:
            tracker = OnlineMobileTracker(device_id, self.cfg, self.near_cells,
                                          self.cell_positions)
            self._mobile[device_id] = tracker
        for alert in tracker.on_event(rec.timestamp_ms,
                                      str(rec.payload["cell_id"]),
                                      str(rec.payload["event"])):
            alert.evidence["imsi"] = str(rec.payload["imsi"])
            self._decorate(alert.evidence)
            self.alerts.append(alert)

    def on_tick(self, t: int, graph) -> None:
        owns_by_obj: dict[str, list] = {}
        for rel in graph.all_relations():
            if rel.kind.value == "OWNS":
                owns_by_obj.setdefault(rel.dst, []).append(rel)
        for obj_id, owns in sorted(owns_by_obj.items()):
            if obj_id not in self.registry:
                continue
            watcher = self._abandon.get(obj_id)
            if watcher is None:
                watcher = OnlineAbandonWatcher(obj_id, self.cfg, self.zones)
                self._abandon[obj_id] = watcher
            hit = watcher.on_tick(t, self.registry, owns)
            if hit is not None:
                evidence = {"max_separation_m": hit["max_separation_m"]}
                if hit["owner_id"] is not None:
                    evidence["owner_id"] = hit["owner_id"]
                if hit["x"] is not None:
                    evidence["x"] = hit["x"]
                    evidence["y"] = hit["y"]
                    self._decorate(evidence)
                entity_ids = ((obj_id, hit["owner_id"])
                              if hit["owner_id"] else (obj_id,))
                self.alerts.append(Alert(
                    alert_id=f"abandon-{obj_id}-{hit['t_start']}",
                    kind=AlertKind.ABANDONED_OBJECT,
                    severity=1.0 if hit["critical"] else 0.7,
                    entity_ids=entity_ids,
                    t_start=hit["t_start"], t_end=hit["t_end"],
                    evidence=evidence))
        for eid in sorted(self._uxv):
            hit = self._uxv[eid].decide()
            if hit is not None:
                evidence = self._decorate({
                    "score": hit["score"], "f_zone": hit["f_zone"],
                    "f_heading": hit["f_heading"], "f_speed": hit["f_speed"],
                    "x": hit["x"], "y": hit["y"]})
                self.alerts.append(Alert(
                    alert_id=f"uxv-{eid}-{hit['t_end']}",
                    kind=AlertKind.SUSPICIOUS_UXV,
                    severity=hit["score"],
                    entity_ids=(eid,),
                    t_start=hit["t_start"], t_end=hit["t_end"],
                    evidence=evidence))
