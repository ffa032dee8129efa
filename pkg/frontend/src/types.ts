/** Wire types for the gateway API and trace stream. */

export interface WorldBounds {
  x_min: number;
  y_min: number;
  x_max: number;
  y_max: number;
}

export interface ZoneDoc {
  zone_id: string;
  polygon: [number, number][];
  tags: string[];
}

export interface SensorDoc {
  sensor_id: string;
  modality: string;
  position: [number, number, number];
  coverage_radius_m: number;
}

export interface TraceMeta {
  type: "meta";
  run_id: string;
  scenario: string;
  spec_hash: string;
  seed: number;
  duration_ms: number;
  phys_start_ms: number;
  world: {
    world_bounds: WorldBounds;
    zones: ZoneDoc[];
    sensors: SensorDoc[];
    t_exec_ms: number | null;
  };
}

export interface ObservationEvent {
  type: "observation";
  seq: number;
  source_id: string;
  modality: string;
  timestamp_ms: number;
  subject_id?: string;
  position?: [number, number, number];
  payload: Record<string, unknown>;
}

export interface AlertEvent {
  type: "alert";
  alert_id: string;
  kind: string;
  severity: number;
  entity_ids: string[];
  t_start: number;
  t_end: number;
  evidence: Record<string, unknown>;
}

export interface CompositeEvent {
  type: "composite";
  event_id: string;
  rule_id: string;
  member_alert_ids: string[];
  t_trigger: number;
  zone_id: string | null;
}

export interface PredictionEvent {
  type: "prediction";
  t: number;
  score: number;
  alarm: boolean;
  alert_id: string;
}

export interface ActionEvent {
  type: "action";
  t: number;
  action: string;
  subject: string;
  detail: string;
}

export interface OutcomeEvent {
  type: "outcome";
  detected_before_exec: boolean;
  t_exec_ms: number | null;
  t_first_composite: number | null;
  lead_time_ms: number | null;
  n_alerts: number;
  n_observations: number;
}

export type TraceEvent =
  | TraceMeta
  | ObservationEvent
  | AlertEvent
  | CompositeEvent
  | PredictionEvent
  | ActionEvent
  | OutcomeEvent;

export interface AssessmentPointDoc {
  params: Record<string, unknown>;
  detection_rate: number;
  vulnerability: number;
  mean_time_to_detect_ms: number | null;
  mean_lead_time_ms: number | null;
  n_runs: number;
}

export interface AssessmentResultDoc {
  scenario: string;
  points: AssessmentPointDoc[];
  per_zone?: Record<string, number>;
}

export interface AssessmentStatusDoc {
  assessment_id: string;
  status: "QUEUED" | "RUNNING" | "DONE" | "FAILED";
  result?: AssessmentResultDoc;
  error?: string;
}

export interface ScenarioDoc {
  name: string;
  sensors: Array<{
    sensor_id: string;
    position: [number, number, number];
    [key: string]: unknown;
  }>;
  detector_cfg?: Record<string, number>;
  attack?: { target_zone_id: string; t_exec_ms: number; class?: string };
  zones: ZoneDoc[];
  [key: string]: unknown;
}
