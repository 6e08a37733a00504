// Transition-graph queries over the table the service exports at /domains.
// This is the single source of truth for what the behavior editor may offer;
// the console never hardcodes the graph.

import type { DomainsResponse, PrimitiveWire } from "./types.js";

export interface TransitionCheck {
  ok: boolean;
  path: string[];
  violation: string | null;
}

/** Primitives that have an edge leaving `domain`. */
export function validNext(table: DomainsResponse, domain: string): PrimitiveWire[] {
  return table.primitives.filter((p) => p.edges.some(([from]) => from === domain));
}

/** The domain a primitive leads to from `domain`, or null when absent. */
export function edgeTarget(prim: PrimitiveWire, domain: string): string | null {
  for (const [from, to] of prim.edges) {
    if (from === domain) return to;
  }
  return null;
}

/**
 * Walk a behavior-id sequence from a start domain. Fails on the first
 * transition absent from the table, citing it, exactly mirroring the
 * server-side sequence check.
 */
export function checkSequence(
  table: DomainsResponse,
  startDomain: string,
  behaviorIds: number[],
): TransitionCheck {
  const byId = new Map(table.primitives.map((p) => [p.id, p]));
  const path = [startDomain];
  let here = startDomain;
  for (const id of behaviorIds) {
    const prim = byId.get(id);
    if (!prim) {
      return { ok: false, path, violation: `unknown behavior id ${id}` };
    }
    const to = edgeTarget(prim, here);
    if (to === null) {
      return {
        ok: false,
        path,
        violation: `behavior ${id} (${prim.name}) has no transition from ${here}`,
      };
    }
    here = to;
    path.push(here);
  }
  if (behaviorIds.length > table.k_max) {
    return { ok: false, path, violation: `sequence longer than k_max = ${table.k_max}` };
  }
  return { ok: true, path, violation: null };
}
