// HTML fragment builders. Pure string functions so the display logic is
// testable without a DOM; main.ts assigns the results to innerHTML.

import { candidateTable, columnLabel, METRIC_COLUMNS, metricsPanel } from "./format.js";
import type { ViewState } from "./state.js";
import { effectiveWaypoints } from "./state.js";

function esc(text: string): string {
  return text.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;").replace(/"/g, "&quot;");
}

export function renderReasoning(state: ViewState): string {
  const s = state.session;
  if (!s) return "<p class=dim>no session</p>";
  const r = s.reasoning;
  const flags = r.flags.length > 0 ? `<p class=warn>flags: ${esc(r.flags.join(", "))}</p>` : "";
  return [
    `<p class=trace>${esc(r.reasoning)}</p>`,
    `<p>campaign <b>${esc(r.campaign ?? "free walk")}</b>, start ${esc(r.start_domain)},`,
    ` horizon t_f = ${r.t_f} s (${r.durations.join(" + ")} steps of ${r.dt} s)</p>`,
    `<p>domains: ${r.path.map(esc).join(" → ")}</p>`,
    flags,
  ].join("");
}

export function renderWaypointRows(state: ViewState): string {
  const rows = effectiveWaypoints(state);
  if (rows.length === 0) return "";
  return rows
    .map((row) => {
      let badge = "<span class='badge pending'>pending</span>";
      if (!row.pending && row.error_m !== null) {
        badge =
          row.error_m > 0
            ? `<span class='badge bad'>${row.error_m} m outside ${esc(row.domain)}</span>`
            : `<span class='badge ok'>in ${esc(row.domain)}</span>`;
      }
      return (
        `<tr data-wp=${row.index}><td>${row.index}</td>` +
        `<td><input data-field=d_lambda data-index=${row.index} value="${row.d_lambda}"></td>` +
        `<td><input data-field=d_eyiy data-index=${row.index} value="${row.d_eyiy}"></td>` +
        `<td>${badge}</td></tr>`
      );
    })
    .join("");
}

export function renderDurationRows(state: ViewState): string {
  const wp = state.waypoints;
  if (!wp) return "";
  return wp.data.plan.durations
    .map((steps, index) => {
      const pendingSteps = state.pendingDurations.get(index);
      const shown = pendingSteps ?? steps;
      const cls = pendingSteps !== undefined ? "pending" : "";
      return (
        `<tr><td>phase ${index}</td>` +
        `<td><input class="${cls}" data-field=steps data-index=${index} value="${shown}"></td>` +
        `<td>${wp.data.behaviors[index] ?? ""} → ${esc(wp.data.path[index + 1] ?? "")}</td></tr>`
      );
    })
    .join("");
}

export function renderWarnings(state: ViewState): string {
  const warnings = state.waypoints?.data.warnings ?? [];
  return warnings.map((w) => `<li>${esc(w)}</li>`).join("");
}

export function renderMetrics(state: ViewState): string {
  if (!state.solve) return "<p class=dim>not solved yet</p>";
  const rec = state.solve.data;
  const status = `<p>status <b class="${rec.scp_status === "converged" ? "good" : "bad"}">${esc(rec.scp_status)}</b>` +
    (rec.failed_phase !== null ? ` (phase ${rec.failed_phase} failed)` : "") +
    `, reward ${rec.reward ?? "n/a"}</p>`;
  const rows = metricsPanel(state.solve.raw, rec, state.prevSolve)
    .map(
      (row) =>
        `<tr><td>${esc(row.key)}</td><td class=num>${esc(row.token)}</td>` +
        `<td class="num dim">${row.delta === null ? "" : esc(row.delta)}</td></tr>`,
    )
    .join("");
  const phases = rec.phases
    .map(
      (p, i) =>
        `<tr><td>${i}</td><td class="${p.status === "converged" ? "good" : "bad"}">${esc(p.status)}</td>` +
        `<td class=num>${p.iterations}</td><td class=num>${p.fuel_mps}</td></tr>`,
    )
    .join("");
  return (
    status +
    `<table><tr><th>metric</th><th>value</th><th>Δ prev</th></tr>${rows}</table>` +
    `<table class=phases><tr><th>phase</th><th>status</th><th>iters</th><th>fuel m/s</th></tr>${phases}</table>`
  );
}

export function renderCandidates(state: ViewState): string {
  if (!state.candidates) return "<p class=dim>no comparison yet</p>";
  const { raw, data } = state.candidates;
  if (data.empty_success) {
    return `<p class=warn>no candidate reached a converged solution${data.detail ? `: ${esc(data.detail)}` : ""}</p>`;
  }
  const head =
    "<tr><th></th><th>id</th><th>campaign</th><th>status</th>" +
    METRIC_COLUMNS.map((c) => `<th>${esc(columnLabel(c))}</th>`).join("") +
    "</tr>";
  const rows = candidateTable(raw, data)
    .map((row) => {
      const mark = row.selected ? "★" : row.rank !== null ? String(row.rank + 1) : "";
      const cells = row.tokens
        .map((tok) => `<td class=num>${tok === null ? "—" : esc(tok)}</td>`)
        .join("");
      return (
        `<tr class="cand ${row.selected ? "selected" : ""}" data-cand=${row.id}>` +
        `<td>${mark}</td><td>${row.id}</td><td>${esc(row.campaign ?? "walk")}</td>` +
        `<td class="${row.scpStatus === "converged" ? "good" : "bad"}">${esc(row.scpStatus)}</td>${cells}</tr>`
      );
    })
    .join("");
  return `<table>${head}${rows}</table><p class=dim>click a row to adopt its plan as an override</p>`;
}

export function renderIntentList(order: string[]): string {
  return order
    .map(
      (key, i) =>
        `<li draggable=true data-intent=${esc(key)} data-pos=${i}><span class=grip>☰</span> ${i + 1}. ${esc(key)}</li>`,
    )
    .join("");
}
