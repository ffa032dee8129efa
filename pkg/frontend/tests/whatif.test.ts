import { describe, expect, it } from "vitest";

import type { ScenarioDoc } from "../src/types.js";
import {
  applyEdits,
  checkEdit,
  compareZoneVulnerability,
  diffEdits,
} from "../src/whatif.js";

function doc(): ScenarioDoc {
  return {
    name: "t",
    sensors: [
      { sensor_id: "sonar-1", position: [200, 120, 0], p_base: 0.9 },
      { sensor_id: "cctv-1", position: [10, 10, 3], p_base: 0.9 },
    ],
    zones: [
      { zone_id: "promenade", polygon: [[0, 0], [1, 0], [1, 1]], tags: ["critical"] },
      { zone_id: "beach", polygon: [[2, 0], [3, 0], [3, 1]], tags: [] },
    ],
    detector_cfg: { loiter_min_ms: 120000 },
    attack: { target_zone_id: "promenade", t_exec_ms: 1000 },
  };
}

describe("what-if edits", () => {
  it("moves a sensor without touching the baseline doc", () => {
    const base = doc();
    const edited = applyEdits(base, [
      { kind: "move_sensor", sensorId: "sonar-1", x: 5, y: 250 },
    ]);
    expect(edited.sensors[0].position).toEqual([5, 250, 0]);
    expect(base.sensors[0].position).toEqual([200, 120, 0]);
  });

  it("sets detector params and retargets the attack", () => {
    const edited = applyEdits(doc(), [
      { kind: "set_detector_param", param: "loiter_min_ms", value: 60000 },
      { kind: "retarget_attack", zoneId: "beach" },
    ]);
    expect(edited.detector_cfg?.loiter_min_ms).toBe(60000);
    expect(edited.attack?.target_zone_id).toBe("beach");
  });

  it("rejects edits referencing missing elements", () => {
    expect(checkEdit(doc(), {
      kind: "move_sensor", sensorId: "nope", x: 0, y: 0,
    })).toMatch(/no sensor/);
    expect(checkEdit(doc(), {
      kind: "retarget_attack", zoneId: "nowhere",
    })).toMatch(/no zone/);
    expect(checkEdit(doc(), {
      kind: "move_sensor", sensorId: "sonar-1", x: 0, y: 0,
    })).toBeNull();
  });

  it("shows old and new values in the diff panel", () => {
    const diff = diffEdits(doc(), [
      { kind: "move_sensor", sensorId: "sonar-1", x: 5, y: 250 },
      { kind: "retarget_attack", zoneId: "beach" },
    ]);
    expect(diff).toEqual([
      { field: "sensor sonar-1 position", before: "(200, 120)", after: "(5, 250)" },
      { field: "attack.target_zone_id", before: "promenade", after: "beach" },
    ]);
  });
});

describe("zone vulnerability comparison", () => {
  it("pairs baseline and edited values with deltas", () => {
    const rows = compareZoneVulnerability(
      { promenade: 0.0, beach: 0.2 },
      { promenade: 1.0, beach: 0.2 },
    );
    expect(rows).toEqual([
      { zoneId: "beach", baseline: 0.2, edited: 0.2, delta: 0.0 },
      { zoneId: "promenade", baseline: 0.0, edited: 1.0, delta: 1.0 },
    ]);
  });

  it("tolerates missing sides", () => {
    const rows = compareZoneVulnerability({ a: 0.5 }, undefined);
    expect(rows).toEqual([{ zoneId: "a", baseline: 0.5, edited: null, delta: null }]);
  });
});
