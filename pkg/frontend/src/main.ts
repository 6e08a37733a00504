// DOM wiring for the operator console. All state transitions flow through
// the pure helpers in state.ts; every displayed number comes from a service
// response (see format.ts / jsontext.ts).

import { ApiClient, ApiError } from "./api.js";
import { drawOnCanvas, planView } from "./canvas.js";
import { checkSequence, edgeTarget, validNext } from "./graph.js";
import {
  renderCandidates,
  renderDurationRows,
  renderIntentList,
  renderMetrics,
  renderReasoning,
  renderWarnings,
  renderWaypointRows,
} from "./render.js";
import {
  adoptCandidatePayload,
  initialState,
  overridePayload,
  reorderIntent,
  withCandidates,
  withSession,
  withSolve,
  withWaypoints,
  type ViewState,
} from "./state.js";
import type { ScenarioWire } from "./types.js";

const api = new ApiClient("");
let state: ViewState = initialState();

const $ = <T extends HTMLElement>(id: string): T => {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el as T;
};

function setError(err: unknown): void {
  const msg =
    err instanceof ApiError
      ? `${err.body.code}: ${err.body.message}${err.body.detail ? ` ${JSON.stringify(err.body.detail)}` : ""}`
      : String(err);
  state = { ...state, error: msg };
  $("error").textContent = msg;
}

function clearError(): void {
  state = { ...state, error: null };
  $("error").textContent = "";
}

function num(id: string): number {
  const v = Number(($(id) as unknown as HTMLInputElement).value);
  if (!Number.isFinite(v)) throw new Error(`field ${id} is not a number`);
  return v;
}

function scenarioFromForm(): ScenarioWire {
  return {
    x0: ["x0-da", "x0-dl", "x0-dex", "x0-dey", "x0-dix", "x0-diy"].map(num),
    oe: {
      a: num("oe-a"),
      e: num("oe-e"),
      i: num("oe-i"),
      raan: num("oe-raan"),
      argp: num("oe-argp"),
      M: num("oe-m"),
    },
    r_koz: Number(($("r-koz") as unknown as HTMLSelectElement).value),
    beta: num("beta"),
    intent: state.intentOrder,
  };
}

function paintIntent(): void {
  const list = $("intent-list");
  list.innerHTML = renderIntentList(state.intentOrder);
  list.querySelectorAll("li").forEach((li) => {
    li.addEventListener("dragstart", (ev) => {
      (ev as DragEvent).dataTransfer?.setData("text/plain", li.dataset.pos!);
    });
    li.addEventListener("dragover", (ev) => ev.preventDefault());
    li.addEventListener("drop", (ev) => {
      ev.preventDefault();
      const from = Number((ev as DragEvent).dataTransfer?.getData("text/plain"));
      const to = Number(li.dataset.pos);
      if (Number.isInteger(from) && Number.isInteger(to) && from !== to) {
        state = { ...state, intentOrder: reorderIntent(state.intentOrder, from, to) };
        paintIntent();
      }
    });
  });
}

function paintBehaviorEditor(): void {
  const table = state.domains;
  const wp = state.waypoints;
  const seqEl = $("behavior-seq");
  const pickEl = $("behavior-pick") as unknown as HTMLSelectElement;
  if (!table || !state.session) {
    seqEl.textContent = "";
    return;
  }
  const pending = state.pendingBehaviors;
  const behaviors = pending ?? wp?.data.behaviors ?? state.session.reasoning.behaviors;
  const start = state.session.reasoning.start_domain;
  const check = checkSequence(table, start, behaviors);
  seqEl.textContent = `${behaviors.join(", ")}  (${check.path.join(" → ")})${pending ? "  [pending]" : ""}`;
  const here = check.path[check.path.length - 1]!;
  pickEl.innerHTML = validNext(table, here)
    .map((p) => `<option value=${p.id}>${p.id}: ${p.name} → ${edgeTarget(p, here)}</option>`)
    .join("");
}

function paintPlanEditors(): void {
  ($("waypoint-rows") as HTMLElement).innerHTML = renderWaypointRows(state);
  ($("duration-rows") as HTMLElement).innerHTML = renderDurationRows(state);
  ($("warnings") as HTMLElement).innerHTML = renderWarnings(state);
  $("plan-origin").textContent = state.waypoints
    ? `waypoints: ${state.waypoints.data.origin}, behaviors: ${state.waypoints.data.behaviors_origin}, ` +
      `overrides recorded: ${state.waypoints.data.history_len}`
    : "";
  document.querySelectorAll<HTMLInputElement>("#waypoint-rows input").forEach((input) => {
    input.addEventListener("change", () => {
      const index = Number(input.dataset.index);
      const field = input.dataset.field as "d_lambda" | "d_eyiy";
      const value = Number(input.value);
      if (!Number.isFinite(value)) return;
      const pendingWaypoints = new Map(state.pendingWaypoints);
      pendingWaypoints.set(index, { ...pendingWaypoints.get(index), [field]: value });
      state = { ...state, pendingWaypoints };
      paintPlanEditors();
    });
  });
  document.querySelectorAll<HTMLInputElement>("#duration-rows input").forEach((input) => {
    input.addEventListener("change", () => {
      const index = Number(input.dataset.index);
      const steps = Number(input.value);
      if (!Number.isInteger(steps)) return;
      const pendingDurations = new Map(state.pendingDurations);
      pendingDurations.set(index, steps);
      state = { ...state, pendingDurations };
      paintPlanEditors();
    });
  });
}

function paintSolve(): void {
  ($("metrics") as HTMLElement).innerHTML = renderMetrics(state);
  const solve = state.solve?.data;
  const domains = state.domains;
  if (!solve || !domains || !state.session) return;
  const rKoz = state.session.scenario.r_koz;
  for (const axis of ["TR", "TN"] as const) {
    const canvas = $(`canvas-${axis.toLowerCase()}`) as unknown as HTMLCanvasElement;
    const ctx = canvas.getContext("2d");
    if (!ctx) continue;
    drawOnCanvas(ctx, planView(solve, axis, rKoz, domains.delta_r_obs, canvas.width, canvas.height), canvas.width, canvas.height);
  }
}

function paintCandidates(): void {
  const el = $("candidates");
  el.innerHTML = renderCandidates(state);
  el.querySelectorAll<HTMLTableRowElement>("tr.cand").forEach((row) => {
    row.addEventListener("click", () => {
      const id = Number(row.dataset.cand);
      const cand = state.candidates?.data.candidates.find((c) => c.id === id);
      if (!cand) return;
      void api
        .waypoints(state.session!.session_id, adoptCandidatePayload(cand))
        .then((wp) => {
          clearError();
          state = withWaypoints(state, wp);
          paintBehaviorEditor();
          paintPlanEditors();
        })
        .catch(setError);
    });
  });
}

function requireSession(): string {
  if (!state.session) throw new Error("create a session first");
  return state.session.session_id;
}

function init(): void {
  paintIntent();

  void api
    .domains()
    .then(({ data }) => {
      state = { ...state, domains: data };
      const koz = $("r-koz") as unknown as HTMLSelectElement;
      koz.innerHTML = data.r_koz_choices.map((r) => `<option value=${r}>${r} m</option>`).join("");
      $("dt-note").textContent = `step ${data.dt} s, horizon cap ${data.n_max} steps, observation shell +${data.delta_r_obs} m`;
    })
    .catch(setError);

  $("create").addEventListener("click", () => {
    void (async () => {
      try {
        clearError();
        const created = await api.createSession(scenarioFromForm());
        state = withSession(state, created.data);
        $("session-note").textContent =
          `session ${created.data.session_id}, start domain ${created.data.domain.name} ` +
          `(${created.data.domain.distance_m} m away)`;
        ($("reasoning") as HTMLElement).innerHTML = renderReasoning(state);
        const wp = await api.waypoints(created.data.session_id);
        state = withWaypoints(state, wp);
        paintBehaviorEditor();
        paintPlanEditors();
        paintSolve();
        paintCandidates();
      } catch (err) {
        setError(err);
      }
    })();
  });

  $("behavior-add").addEventListener("click", () => {
    if (!state.domains || !state.session) return;
    const pick = Number(($("behavior-pick") as unknown as HTMLSelectElement).value);
    const current =
      state.pendingBehaviors ?? state.waypoints?.data.behaviors ?? state.session.reasoning.behaviors;
    const next = [...current, pick];
    const check = checkSequence(state.domains, state.session.reasoning.start_domain, next);
    if (!check.ok) {
      setError(new Error(`edit blocked: ${check.violation}`));
      return;
    }
    clearError();
    state = { ...state, pendingBehaviors: next };
    paintBehaviorEditor();
  });

  $("behavior-pop").addEventListener("click", () => {
    if (!state.session) return;
    const current =
      state.pendingBehaviors ?? state.waypoints?.data.behaviors ?? state.session.reasoning.behaviors;
    if (current.length <= 1) {
      setError(new Error("edit blocked: a plan needs at least one behavior"));
      return;
    }
    clearError();
    state = { ...state, pendingBehaviors: current.slice(0, -1) };
    paintBehaviorEditor();
  });

  $("behavior-set").addEventListener("click", () => {
    if (!state.domains || !state.session) return;
    const text = ($("behavior-input") as unknown as HTMLInputElement).value;
    const ids = text
      .split(",")
      .map((s) => s.trim())
      .filter((s) => s.length > 0)
      .map(Number);
    if (ids.some((v) => !Number.isInteger(v))) {
      setError(new Error("edit blocked: behavior ids must be integers"));
      return;
    }
    const check = checkSequence(state.domains, state.session.reasoning.start_domain, ids);
    if (!check.ok) {
      setError(new Error(`edit blocked: ${check.violation}`));
      return;
    }
    clearError();
    state = { ...state, pendingBehaviors: ids };
    paintBehaviorEditor();
  });

  $("apply").addEventListener("click", () => {
    void (async () => {
      try {
        const sid = requireSession();
        const payload = overridePayload(state);
        const wp = await api.waypoints(sid, payload ?? undefined);
        clearError();
        state = withWaypoints(state, wp);
        paintBehaviorEditor();
        paintPlanEditors();
      } catch (err) {
        setError(err);
      }
    })();
  });

  $("solve").addEventListener("click", () => {
    void (async () => {
      try {
        const sid = requireSession();
        const solved = await api.solve(sid);
        clearError();
        state = withSolve(state, solved);
        paintSolve();
      } catch (err) {
        setError(err);
      }
    })();
  });

  $("compare").addEventListener("click", () => {
    void (async () => {
      try {
        const sid = requireSession();
        const cands = await api.candidates(sid);
        clearError();
        state = withCandidates(state, cands);
        paintCandidates();
      } catch (err) {
        setError(err);
      }
    })();
  });
}

document.addEventListener("DOMContentLoaded", init);
