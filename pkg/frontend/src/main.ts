/** Console wiring: token entry, live run view, what-if panel. */

import { api, assessScenarioDoc, type ApiConfig } from "./api.js";
import { formatV } from "./heatmap.js";
import {
  alertFeed,
  applyTraceEvent,
  emptyViewModel,
  type ViewModel,
} from "./model.js";
import { renderSparkline, renderWorld } from "./render.js";
import { streamRun } from "./sse.js";
import type { ScenarioDoc, TraceEvent } from "./types.js";
import {
  applyEdits,
  checkEdit,
  compareZoneVulnerability,
  diffEdits,
  type WhatIfEdit,
} from "./whatif.js";

const $ = <T extends HTMLElement>(id: string): T => {
  const el = document.getElementById(id);
  if (el === null) throw new Error(`missing element #${id}`);
  return el as T;
};

interface ConsoleState {
  cfg: ApiConfig;
  vm: ViewModel;
  scenarioId: string | null;
  scenarioDoc: ScenarioDoc | null;
  edits: WhatIfEdit[];
  baselineVz: Record<string, number> | null;
  editedVz: Record<string, number> | null;
}

const params = new URLSearchParams(window.location.search);
const state: ConsoleState = {
  cfg: {
    baseUrl: params.get("api") ?? window.location.origin,
    token: params.get("token") ?? "",
  },
  vm: emptyViewModel(),
  scenarioId: null,
  scenarioDoc: null,
  edits: [],
  baselineVz: null,
  editedVz: null,
};

function setStatus(text: string): void {
  $("status").textContent = text;
}

function redraw(): void {
  renderWorld($("map") as HTMLCanvasElement, state.vm, {
    heatmap: state.baselineVz ?? undefined,
  });
  renderSparkline($("sparkline") as HTMLCanvasElement, state.vm.predictionSeries);
  const feed = $("feed");
  feed.replaceChildren(
    ...state.vm.feed
      .slice()
      .reverse()
      .slice(0, 200)
      .map((row) => {
        const li = document.createElement("li");
        li.className = `row-${row.rowType}`;
        const sev = row.severity === null ? "" : ` sev=${row.severity.toFixed(2)}`;
        li.textContent = `[${(row.t / 1000).toFixed(1)}s] ${row.label}${sev}`;
        return li;
      }),
  );
  $("feed-count").textContent =
    `${alertFeed(state.vm).length} alerts / ${state.vm.composites.length} composite`;
  const outcome = state.vm.outcome;
  if (outcome !== null) {
    $("outcome").textContent = outcome.detected_before_exec
      ? `DETECTED (lead ${outcome.lead_time_ms ?? "?"} ms)`
      : "NOT DETECTED before execution";
  }
}

async function loadWorldView(): Promise<void> {
  const runId = ($("run-id") as HTMLInputElement).value.trim();
  if (runId === "") {
    setStatus("enter a run id");
    return;
  }
  state.vm = emptyViewModel();
  redraw();
  try {
    await api.getRun(state.cfg, runId);
  } catch (err) {
    setStatus(`run not found: ${String(err)}`);
    $("feed").replaceChildren();
    return;
  }
  const speed = Number(($("speed") as HTMLInputElement).value) || 0;
  await streamRun({
    baseUrl: state.cfg.baseUrl,
    token: state.cfg.token,
    runId,
    speed,
    onStatus: setStatus,
    onMessage: (msg) => {
      const ev = JSON.parse(msg.data) as TraceEvent;
      applyTraceEvent(state.vm, ev);
      redraw();
    },
  });
}

function renderDiff(): void {
  const list = $("diff");
  if (state.scenarioDoc === null || state.edits.length === 0) {
    list.replaceChildren();
    return;
  }
  list.replaceChildren(
    ...diffEdits(state.scenarioDoc, state.edits).map((d) => {
      const li = document.createElement("li");
      li.textContent = `${d.field}: ${d.before} -> ${d.after}`;
      return li;
    }),
  );
}

function renderComparison(): void {
  const table = $("comparison");
  const rows = compareZoneVulnerability(
    state.baselineVz ?? undefined,
    state.editedVz ?? undefined,
  );
  table.replaceChildren(
    ...rows.map((row) => {
      const tr = document.createElement("tr");
      const cells = [
        row.zoneId,
        row.baseline === null ? "-" : formatV(row.baseline),
        row.edited === null ? "-" : formatV(row.edited),
        row.delta === null ? "-" : (row.delta >= 0 ? "+" : "") + formatV(row.delta),
      ];
      tr.replaceChildren(
        ...cells.map((text) => {
          const td = document.createElement("td");
          td.textContent = text;
          return td;
        }),
      );
      return tr;
    }),
  );
}

async function loadScenario(): Promise<void> {
  const sid = ($("scenario-id") as HTMLInputElement).value.trim();
  state.scenarioDoc = await api.getScenario(state.cfg, sid);
  state.scenarioId = sid;
  state.edits = [];
  state.baselineVz = null;
  state.editedVz = null;
  setStatus(`scenario ${state.scenarioDoc.name} loaded`);
  renderDiff();
}

function addEdit(edit: WhatIfEdit): void {
  if (state.scenarioDoc === null) {
    setStatus("load a scenario first");
    return;
  }
  const problem = checkEdit(state.scenarioDoc, edit);
  if (problem !== null) {
    setStatus(`edit rejected: ${problem}`);
    return;
  }
  state.edits.push(edit);
  renderDiff();
}

async function submitWhatIf(): Promise<void> {
  if (state.scenarioDoc === null || state.scenarioId === null) {
    setStatus("load a scenario first");
    return;
  }
  const nRuns = Number(($("assess-runs") as HTMLInputElement).value) || 100;
  setStatus("assessing baseline and edited configurations...");
  try {
    if (state.baselineVz === null) {
      state.baselineVz = await assessScenarioDoc(
        state.cfg, state.scenarioDoc, nRuns, 0);
    }
    const edited = applyEdits(state.scenarioDoc, state.edits);
    state.editedVz = await assessScenarioDoc(state.cfg, edited, nRuns, 0);
    setStatus("assessment complete");
    renderComparison();
    redraw();
  } catch (err) {
    setStatus(`assessment failed: ${String(err)}`);
  }
}

function wire(): void {
  $("token").addEventListener("change", (ev) => {
    state.cfg.token = (ev.target as HTMLInputElement).value.trim();
  });
  ($("token") as HTMLInputElement).value = state.cfg.token;
  $("btn-load-run").addEventListener("click", () => void loadWorldView());
  $("btn-load-scenario").addEventListener("click", () => void loadScenario());
  $("btn-submit-whatif").addEventListener("click", () => void submitWhatIf());
  $("btn-move-sensor").addEventListener("click", () => {
    addEdit({
      kind: "move_sensor",
      sensorId: ($("edit-sensor-id") as HTMLInputElement).value.trim(),
      x: Number(($("edit-sensor-x") as HTMLInputElement).value),
      y: Number(($("edit-sensor-y") as HTMLInputElement).value),
    });
  });
  $("btn-set-param").addEventListener("click", () => {
    addEdit({
      kind: "set_detector_param",
      param: ($("edit-param-name") as HTMLInputElement).value.trim(),
      value: Number(($("edit-param-value") as HTMLInputElement).value),
    });
  });
  $("btn-retarget").addEventListener("click", () => {
    addEdit({
      kind: "retarget_attack",
      zoneId: ($("edit-zone-id") as HTMLInputElement).value.trim(),
    });
  });
}

wire();
setStatus("ready");
