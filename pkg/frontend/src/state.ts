// Console view state: a pure function of the last service responses plus the
// operator's pending edits. Mutations happen only through the helpers below,
// each of which returns a new state object.

import type { WaypointOverride } from "./api.js";
import type {
  CandidateRecord,
  CandidatesResponse,
  DomainsResponse,
  Enveloped,
  SessionCreated,
  SolveRecord,
  WaypointsResponse,
} from "./types.js";

export const INTENT_KEYS = ["fuel", "time", "observation", "safety_margin"] as const;

export interface ViewState {
  domains: DomainsResponse | null;
  intentOrder: string[];
  session: SessionCreated | null;
  waypoints: Enveloped<WaypointsResponse> | null;
  solve: Enveloped<SolveRecord> | null;
  prevSolve: SolveRecord | null;
  candidates: Enveloped<CandidatesResponse> | null;
  // pending (not yet round-tripped) operator edits
  pendingWaypoints: Map<number, { d_lambda?: number; d_eyiy?: number }>;
  pendingDurations: Map<number, number>;
  pendingBehaviors: number[] | null;
  error: string | null;
}

export function initialState(): ViewState {
  return {
    domains: null,
    intentOrder: [...INTENT_KEYS],
    session: null,
    waypoints: null,
    solve: null,
    prevSolve: null,
    candidates: null,
    pendingWaypoints: new Map(),
    pendingDurations: new Map(),
    pendingBehaviors: null,
    error: null,
  };
}

export function withSession(state: ViewState, session: SessionCreated): ViewState {
  return {
    ...initialState(),
    domains: state.domains,
    intentOrder: session.scenario.intent,
    session,
  };
}

export function withWaypoints(state: ViewState, wp: Enveloped<WaypointsResponse>): ViewState {
  return {
    ...state,
    waypoints: wp,
    pendingWaypoints: new Map(),
    pendingDurations: new Map(),
    pendingBehaviors: null,
    candidates: null,
    error: null,
  };
}

export function withSolve(state: ViewState, solve: Enveloped<SolveRecord>): ViewState {
  return { ...state, prevSolve: state.solve?.data ?? null, solve, error: null };
}

export function withCandidates(state: ViewState, cands: Enveloped<CandidatesResponse>): ViewState {
  return { ...state, candidates: cands, error: null };
}

export function reorderIntent(order: string[], from: number, to: number): string[] {
  const next = [...order];
  const [moved] = next.splice(from, 1);
  next.splice(to, 0, moved!);
  return next;
}

/** Build the override payload for the pending edits; null when nothing is pending. */
export function overridePayload(state: ViewState): WaypointOverride | null {
  const payload: WaypointOverride = {};
  if (state.pendingBehaviors !== null) payload.behaviors = state.pendingBehaviors;
  if (state.pendingDurations.size > 0) {
    payload.durations = [...state.pendingDurations.entries()].map(([index, steps]) => ({
      index,
      steps,
    }));
  }
  if (state.pendingWaypoints.size > 0) {
    payload.waypoints = [...state.pendingWaypoints.entries()].map(([index, patch]) => ({
      index,
      ...patch,
    }));
  }
  return Object.keys(payload).length > 0 ? payload : null;
}

/** Adopting a candidate replays its whole plan as one override event. */
export function adoptCandidatePayload(cand: CandidateRecord): WaypointOverride {
  return {
    behaviors: [...cand.behaviors],
    durations: [...cand.durations],
    waypoints: cand.plan.waypoints.map((wp, index) => ({
      index,
      d_lambda: wp.d_lambda,
      d_eyiy: wp.d_eyiy,
    })),
  };
}

/** Waypoint rows shown in the editor: server values overlaid with pending edits. */
export function effectiveWaypoints(
  state: ViewState,
): { index: number; d_lambda: number; d_eyiy: number; domain: string; error_m: number | null; pending: boolean }[] {
  const wp = state.waypoints;
  if (!wp) return [];
  return wp.data.plan.waypoints.map((w, index) => {
    const patch = state.pendingWaypoints.get(index);
    return {
      index,
      d_lambda: patch?.d_lambda ?? w.d_lambda,
      d_eyiy: patch?.d_eyiy ?? w.d_eyiy,
      domain: wp.data.path[index + 1] ?? "?",
      // badges show solver truth: a pending edit has no server error yet
      error_m: patch ? null : wp.data.domain_errors_m[index] ?? null,
      pending: patch !== undefined,
    };
  });
}
