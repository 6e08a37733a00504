// Wire types for the /api/v1 JSON surface. Field names mirror the service
// responses exactly; nothing here is computed client-side.

export interface OrbitalElementsWire {
  a: number;
  e: number;
  i: number;
  raan: number;
  argp: number;
  M: number;
}

export interface ScenarioWire {
  x0: number[];
  oe: OrbitalElementsWire;
  r_koz: number;
  beta: number;
  intent: string[];
  seed?: number;
  index?: number;
}

export interface ReasoningWire {
  reasoning: string;
  t_f: number;
  behaviors: number[];
  durations: number[];
  path: string[];
  campaign: string | null;
  dt: number;
  flags: string[];
  start_domain: string;
}

export interface SessionCreated {
  session_id: string;
  scenario: ScenarioWire;
  domain: { name: string; distance_m: number };
  reasoning: ReasoningWire;
  history_len: number;
}

export interface PlanWire {
  waypoints: { d_lambda: number; d_eyiy: number }[];
  durations: number[];
}

export interface WaypointsResponse {
  plan: PlanWire;
  path: string[];
  behaviors: number[];
  origin: string;
  behaviors_origin: string;
  domain_errors_m: number[];
  warnings: string[];
  history_len: number;
}

export interface PhaseWire {
  status: string;
  iterations: number;
  fuel_mps: number;
  max_margin_m: number | null;
}

export interface MetricsWire {
  fuel_dv: number;
  transfer_time_sec: number;
  observation_score: number;
  safety_margin_m: number;
}

export interface SolveRecord {
  schema_version: number;
  scenario: ScenarioWire;
  plan: PlanWire;
  scp_status: string;
  phases: PhaseWire[];
  epochs_s: number[];
  states_roe_m: number[][];
  impulses_mps: number[][];
  rtn_states: number[][];
  ranges_m: number[];
  metrics: MetricsWire | null;
  reward: number | null;
  failed_phase: number | null;
}

export interface CandidateRecord {
  id: number;
  campaign: string | null;
  start_domain: string;
  path: string[];
  behaviors: number[];
  durations: number[];
  t_f: number;
  plan: PlanWire;
  scp_status: string;
  metrics: MetricsWire | null;
  rank?: number;
  selected?: boolean;
}

export interface CandidatesResponse {
  candidates: CandidateRecord[];
  selected_id: number | null;
  empty_success: boolean;
  detail?: string;
}

export interface DomainWire {
  name: string;
  d_lambda: [number, number];
  d_eyiy: [number, number];
}

export interface PrimitiveWire {
  id: number;
  name: string;
  edges: [string, string][];
  window: [number, number];
}

export interface DomainsResponse {
  domains: DomainWire[];
  primitives: PrimitiveWire[];
  campaigns: Record<string, string[][]>;
  k_max: number;
  n_max: number;
  dt: number;
  r_koz_choices: number[];
  delta_r_obs: number;
}

export interface ApiErrorBody {
  code: string;
  message: string;
  detail?: unknown;
}

// every response keeps its raw text so displayed numbers can be shown
// byte-for-byte as the service serialized them
export interface Enveloped<T> {
  raw: string;
  data: T;
  status: number;
}
