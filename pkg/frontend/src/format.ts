// Display models for metrics and candidate tables. Values are raw tokens
// lifted from response text (byte-equal to the wire); only the auxiliary
// deltas between two solves are computed client-side.

import { rawValueTokens } from "./jsontext.js";
import type { CandidatesResponse, SolveRecord } from "./types.js";

export interface MetricColumn {
  key: "fuel_dv" | "transfer_time_sec" | "observation_score" | "safety_margin_m";
  arrow: "↓" | "↑"; // down = lower is better, up = higher is better
}

export const METRIC_COLUMNS: MetricColumn[] = [
  { key: "fuel_dv", arrow: "↓" },
  { key: "transfer_time_sec", arrow: "↓" },
  { key: "observation_score", arrow: "↑" },
  { key: "safety_margin_m", arrow: "↑" },
];

export function columnLabel(col: MetricColumn): string {
  return `${col.arrow} ${col.key}`;
}

export interface MetricsPanelRow {
  key: string;
  token: string; // literal wire token
  delta: string | null; // signed change vs previous solve, client-formatted
}

/** One row per metric; token comes from the raw bytes of the solve record. */
export function metricsPanel(raw: string, data: SolveRecord, prev: SolveRecord | null): MetricsPanelRow[] {
  if (data.metrics === null) return [];
  return METRIC_COLUMNS.map((col) => {
    const toks = rawValueTokens(raw, col.key);
    const token = toks.length > 0 ? toks[0]! : String(data.metrics![col.key]);
    let delta: string | null = null;
    if (prev && prev.metrics) {
      const d = data.metrics![col.key] - prev.metrics[col.key];
      delta = `${d >= 0 ? "+" : ""}${d.toPrecision(4)}`;
    }
    return { key: col.key, token, delta };
  });
}

export interface CandidateRow {
  id: number;
  rank: number | null;
  selected: boolean;
  campaign: string | null;
  scpStatus: string;
  tokens: (string | null)[]; // one per METRIC_COLUMNS entry, null for failed rows
}

/**
 * Table model for the candidate comparison. Rows are ordered by rank
 * (unranked failures last); tokens are the literal wire values in the order
 * the records appear in the raw text.
 */
export function candidateTable(raw: string, data: CandidatesResponse): CandidateRow[] {
  const perKey = new Map(METRIC_COLUMNS.map((c) => [c.key, rawValueTokens(raw, c.key)]));
  // records with metrics consume tokens in document order
  let cursor = 0;
  const rows: CandidateRow[] = data.candidates.map((cand) => {
    const has = cand.metrics !== null;
    const tokens = METRIC_COLUMNS.map((col) => {
      if (!has) return null;
      const toks = perKey.get(col.key)!;
      return cursor < toks.length ? toks[cursor]! : String(cand.metrics![col.key]);
    });
    if (has) cursor += 1;
    return {
      id: cand.id,
      rank: cand.rank ?? null,
      selected: cand.selected ?? false,
      campaign: cand.campaign,
      scpStatus: cand.scp_status,
      tokens,
    };
  });
  rows.sort((a, b) => (a.rank ?? Infinity) - (b.rank ?? Infinity) || a.id - b.id);
  return rows;
}
