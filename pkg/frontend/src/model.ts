/** View model: everything the console renders derives from API responses
 * plus pending local edits; trace events fold in through `applyTraceEvent`.
 */

import type {
  AlertEvent,
  CompositeEvent,
  OutcomeEvent,
  TraceEvent,
  TraceMeta,
} from "./types.js";

export interface Marker {
  entityId: string;
  kind: string;
  x: number;
  y: number;
  lastSeenMs: number;
  trail: [number, number][]; // most recent last
  alerted: boolean;
}

export interface FeedRow {
  t: number;
  kind: string; // alert kind, or composite rule id, or action name
  severity: number | null;
  label: string;
  entityIds: string[];
  rowType: "alert" | "composite" | "action";
}

export interface ViewModel {
  meta: TraceMeta | null;
  markers: Map<string, Marker>;
  feed: FeedRow[];
  predictionSeries: { t: number; score: number; alarm: boolean }[];
  composites: CompositeEvent[];
  outcome: OutcomeEvent | null;
  observationCount: number;
  alertCount: number;
}

export const TRAIL_LIMIT = 50;

export function emptyViewModel(): ViewModel {
  return {
    meta: null,
    markers: new Map(),
    feed: [],
    predictionSeries: [],
    composites: [],
    outcome: null,
    observationCount: 0,
    alertCount: 0,
  };
}

function trackKind(ev: { payload: Record<string, unknown> }): string {
  const kind = ev.payload["kind"];
  return typeof kind === "string" ? kind : "unknown";
}

export function applyTraceEvent(vm: ViewModel, ev: TraceEvent): ViewModel {
  switch (ev.type) {
    case "meta":
      vm.meta = ev;
      break;
    case "observation": {
      vm.observationCount += 1;
      if (ev.subject_id === undefined || ev.position === undefined) break;
      const [x, y] = ev.position;
      let marker = vm.markers.get(ev.subject_id);
      if (marker === undefined) {
        marker = {
          entityId: ev.subject_id,
          kind: trackKind(ev),
          x,
          y,
          lastSeenMs: ev.timestamp_ms,
          trail: [],
          alerted: false,
        };
        vm.markers.set(ev.subject_id, marker);
      }
      marker.x = x;
      marker.y = y;
      marker.lastSeenMs = ev.timestamp_ms;
      marker.trail.push([x, y]);
      if (marker.trail.length > TRAIL_LIMIT) marker.trail.shift();
      break;
    }
    case "alert": {
      vm.alertCount += 1;
      vm.feed.push(alertRow(ev));
      for (const eid of ev.entity_ids) {
        const marker = vm.markers.get(eid);
        if (marker !== undefined) marker.alerted = true;
      }
      break;
    }
    case "composite":
      vm.composites.push(ev);
      vm.feed.push({
        t: ev.t_trigger,
        kind: ev.rule_id,
        severity: null,
        label: `composite ${ev.rule_id}` +
          (ev.zone_id ? ` in ${ev.zone_id}` : ""),
        entityIds: [],
        rowType: "composite",
      });
      break;
    case "prediction":
      vm.predictionSeries.push({ t: ev.t, score: ev.score, alarm: ev.alarm });
      break;
    case "action":
      vm.feed.push({
        t: ev.t,
        kind: ev.action,
        severity: null,
        label: `${ev.action}: ${ev.subject}`,
        entityIds: [ev.subject],
        rowType: "action",
      });
      break;
    case "outcome":
      vm.outcome = ev;
      break;
  }
  return vm;
}

function alertRow(ev: AlertEvent): FeedRow {
  return {
    t: ev.t_end,
    kind: ev.kind,
    severity: ev.severity,
    label: `${ev.kind} (${ev.severity.toFixed(2)}) ${ev.entity_ids.join(",")}`,
    entityIds: ev.entity_ids,
    rowType: "alert",
  };
}

/** Alert rows in the feed (the live feed shows these newest-first). */
export function alertFeed(vm: ViewModel): FeedRow[] {
  return vm.feed.filter((row) => row.rowType === "alert");
}

/** Fold a complete trace (parsed lines) into a fresh view model. */
export function viewModelFromTrace(lines: TraceEvent[]): ViewModel {
  const vm = emptyViewModel();
  for (const ev of lines) applyTraceEvent(vm, ev);
  return vm;
}
