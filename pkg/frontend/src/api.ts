/** Thin typed client for the gateway REST API. */

import type {
  AssessmentStatusDoc,
  ScenarioDoc,
} from "./types.js";

export interface ApiConfig {
  baseUrl: string;
  token: string;
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
  ) {
    super(message);
  }
}

async function call<T>(
  cfg: ApiConfig,
  method: string,
  path: string,
  body?: unknown,
): Promise<T> {
  const resp = await fetch(`${cfg.baseUrl}${path}`, {
    method,
    headers: {
      Authorization: `Bearer ${cfg.token}`,
      ...(body !== undefined ? { "Content-Type": "application/json" } : {}),
    },
    body: body !== undefined ? JSON.stringify(body) : undefined,
  });
  const doc = (await resp.json()) as Record<string, unknown>;
  if (!resp.ok) {
    const err = doc["error"] as { code?: string; message?: string } | undefined;
    throw new ApiError(resp.status, err?.code ?? "unknown",
      err?.message ?? `HTTP ${resp.status}`);
  }
  return doc as T;
}

export const api = {
  health: (cfg: ApiConfig) =>
    call<{ status: string; version: string }>(cfg, "GET", "/api/health"),

  postScenario: (cfg: ApiConfig, doc: ScenarioDoc) =>
    call<{ scenario_id: string }>(cfg, "POST", "/api/scenarios", doc),

  getScenario: (cfg: ApiConfig, scenarioId: string) =>
    call<ScenarioDoc>(cfg, "GET", `/api/scenarios/${scenarioId}`),

  postRun: (cfg: ApiConfig, scenarioId: string, seed: number) =>
    call<{ run_id: string; status: string }>(cfg, "POST", "/api/runs", {
      scenario_id: scenarioId,
      seed,
    }),

  getRun: (cfg: ApiConfig, runId: string) =>
    call<{ run_id: string; status: string; outcome?: Record<string, unknown> }>(
      cfg, "GET", `/api/runs/${runId}`),

  postAssessment: (
    cfg: ApiConfig,
    scenarioId: string,
    nRuns: number,
    baseSeed: number,
    perZone: boolean,
  ) =>
    call<AssessmentStatusDoc>(cfg, "POST", "/api/assessments", {
      scenario_id: scenarioId,
      n_runs: nRuns,
      base_seed: baseSeed,
      per_zone: perZone,
    }),

  getAssessment: (cfg: ApiConfig, assessmentId: string) =>
    call<AssessmentStatusDoc>(cfg, "GET", `/api/assessments/${assessmentId}`),
};

/** Poll an assessment until DONE/FAILED with linear-then-capped backoff. */
export async function awaitAssessment(
  cfg: ApiConfig,
  assessmentId: string,
  timeoutMs = 120_000,
): Promise<AssessmentStatusDoc> {
  const deadline = Date.now() + timeoutMs;
  let delay = 150;
  for (;;) {
    const doc = await api.getAssessment(cfg, assessmentId);
    if (doc.status === "DONE" || doc.status === "FAILED") return doc;
    if (Date.now() > deadline) {
      throw new Error(`assessment ${assessmentId} timed out`);
    }
    await new Promise((resolve) => setTimeout(resolve, delay));
    delay = Math.min(delay * 1.5, 2_000);
  }
}

/** Run a per-zone assessment for a (possibly edited) scenario document. */
export async function assessScenarioDoc(
  cfg: ApiConfig,
  doc: ScenarioDoc,
  nRuns: number,
  baseSeed: number,
): Promise<Record<string, number>> {
  const { scenario_id } = await api.postScenario(cfg, doc);
  const submitted = await api.postAssessment(cfg, scenario_id, nRuns, baseSeed, true);
  const finished = await awaitAssessment(cfg, submitted.assessment_id);
  if (finished.status !== "DONE" || finished.result?.per_zone === undefined) {
    throw new Error(finished.error ?? "assessment failed");
  }
  return finished.result.per_zone;
}
