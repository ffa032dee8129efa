/** What-if editing: pending scenario edits, their diff, and submission.
 *
 * Edits never mutate the baseline document; `applyEdits` builds the edited
 * copy that goes to POST /api/scenarios + /api/assessments on submit, and
 * the result renders beside the baseline for comparison.
 */

import type { ScenarioDoc } from "./types.js";

export type WhatIfEdit =
  | { kind: "move_sensor"; sensorId: string; x: number; y: number }
  | { kind: "set_detector_param"; param: string; value: number }
  | { kind: "retarget_attack"; zoneId: string };

export interface DiffEntry {
  field: string;
  before: string;
  after: string;
}

function cloneDoc(doc: ScenarioDoc): ScenarioDoc {
  return JSON.parse(JSON.stringify(doc)) as ScenarioDoc;
}

/** Validate an edit against the document it would apply to. */
export function checkEdit(doc: ScenarioDoc, edit: WhatIfEdit): string | null {
  switch (edit.kind) {
    case "move_sensor":
      if (!doc.sensors.some((s) => s.sensor_id === edit.sensorId)) {
        return `no sensor named ${edit.sensorId}`;
      }
      return null;
    case "set_detector_param":
      if (!/^[a-z_]+$/.test(edit.param)) return `bad parameter ${edit.param}`;
      return null;
    case "retarget_attack":
      if (!doc.zones.some((z) => z.zone_id === edit.zoneId)) {
        return `no zone named ${edit.zoneId}`;
      }
      if (doc.attack === undefined) return "scenario has no attack to retarget";
      return null;
  }
}

export function applyEdits(doc: ScenarioDoc, edits: WhatIfEdit[]): ScenarioDoc {
  const out = cloneDoc(doc);
  for (const edit of edits) {
    switch (edit.kind) {
      case "move_sensor": {
        const sensor = out.sensors.find((s) => s.sensor_id === edit.sensorId);
        if (sensor === undefined) throw new Error(`no sensor ${edit.sensorId}`);
        sensor.position = [edit.x, edit.y, sensor.position[2]];
        break;
      }
      case "set_detector_param": {
        out.detector_cfg = { ...(out.detector_cfg ?? {}) };
        out.detector_cfg[edit.param] = edit.value;
        break;
      }
      case "retarget_attack": {
        if (out.attack === undefined) throw new Error("no attack to retarget");
        out.attack = { ...out.attack, target_zone_id: edit.zoneId };
        break;
      }
    }
  }
  return out;
}

/** Human-readable old/new pairs for the pending-edit panel. */
export function diffEdits(doc: ScenarioDoc, edits: WhatIfEdit[]): DiffEntry[] {
  const out: DiffEntry[] = [];
  const edited = applyEdits(doc, edits);
  for (const edit of edits) {
    switch (edit.kind) {
      case "move_sensor": {
        const before = doc.sensors.find((s) => s.sensor_id === edit.sensorId);
        const after = edited.sensors.find((s) => s.sensor_id === edit.sensorId);
        out.push({
          field: `sensor ${edit.sensorId} position`,
          before: before ? `(${before.position[0]}, ${before.position[1]})` : "?",
          after: after ? `(${after.position[0]}, ${after.position[1]})` : "?",
        });
        break;
      }
      case "set_detector_param": {
        const before = doc.detector_cfg?.[edit.param];
        out.push({
          field: `detector_cfg.${edit.param}`,
          before: before === undefined ? "(default)" : String(before),
          after: String(edit.value),
        });
        break;
      }
      case "retarget_attack":
        out.push({
          field: "attack.target_zone_id",
          before: doc.attack?.target_zone_id ?? "?",
          after: edit.zoneId,
        });
        break;
    }
  }
  return out;
}

/** Per-zone V comparison rows for the baseline-vs-edited heatmap panel. */
export interface ZoneComparison {
  zoneId: string;
  baseline: number | null;
  edited: number | null;
  delta: number | null;
}

export function compareZoneVulnerability(
  baseline: Record<string, number> | undefined,
  edited: Record<string, number> | undefined,
): ZoneComparison[] {
  const zones = new Set<string>([
    ...Object.keys(baseline ?? {}),
    ...Object.keys(edited ?? {}),
  ]);
  return [...zones].sort().map((zoneId) => {
    const b = baseline?.[zoneId] ?? null;
    const e = edited?.[zoneId] ?? null;
    return {
      zoneId,
      baseline: b,
      edited: e,
      delta: b !== null && e !== null ? e - b : null,
    };
  });
}
