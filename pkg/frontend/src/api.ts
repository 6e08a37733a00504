// Typed client for /api/v1. Each call resolves to the parsed body plus the
// raw response text. Mutating calls for the single session are queued so a
// second solve can never overtake the first.

import type {
  ApiErrorBody,
  CandidatesResponse,
  DomainsResponse,
  Enveloped,
  ScenarioWire,
  SessionCreated,
  SolveRecord,
  WaypointsResponse,
} from "./types.js";

export class ApiError extends Error {
  readonly status: number;
  readonly body: ApiErrorBody;

  constructor(status: number, body: ApiErrorBody) {
    super(`${body.code}: ${body.message}`);
    this.status = status;
    this.body = body;
  }
}

export interface WaypointOverride {
  behaviors?: number[];
  durations?: number[] | { index: number; steps: number }[];
  waypoints?: { index: number; d_lambda?: number; d_eyiy?: number }[];
}

export class ApiClient {
  private readonly base: string;
  private queue: Promise<unknown> = Promise.resolve();

  constructor(base = "") {
    this.base = base.replace(/\/$/, "");
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<Enveloped<T>> {
    const res = await fetch(`${this.base}/api/v1${path}`, {
      method,
      headers: body === undefined ? undefined : { "content-type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const raw = await res.text();
    if (!res.ok) {
      let parsed: ApiErrorBody;
      try {
        parsed = JSON.parse(raw) as ApiErrorBody;
      } catch {
        parsed = { code: `http_${res.status}`, message: raw.slice(0, 200) };
      }
      throw new ApiError(res.status, parsed);
    }
    return { raw, data: JSON.parse(raw) as T, status: res.status };
  }

  /** serialize mutating calls: each waits for the previous one to settle */
  private enqueue<T>(task: () => Promise<T>): Promise<T> {
    const next = this.queue.then(task, task);
    this.queue = next.catch(() => undefined);
    return next;
  }

  domains(): Promise<Enveloped<DomainsResponse>> {
    return this.request("GET", "/domains");
  }

  createSession(scenario: ScenarioWire, intent?: string[] | string): Promise<Enveloped<SessionCreated>> {
    const payload: Record<string, unknown> = { scenario };
    if (intent !== undefined) payload.intent = intent;
    return this.enqueue(() => this.request("POST", "/sessions", payload));
  }

  waypoints(sid: string, override?: WaypointOverride): Promise<Enveloped<WaypointsResponse>> {
    return this.enqueue(() => this.request("POST", `/sessions/${sid}/waypoints`, override ?? {}));
  }

  solve(sid: string): Promise<Enveloped<SolveRecord>> {
    return this.enqueue(() => this.request("POST", `/sessions/${sid}/solve`));
  }

  candidates(sid: string, m?: number): Promise<Enveloped<CandidatesResponse>> {
    return this.enqueue(() =>
      this.request("POST", `/sessions/${sid}/candidates`, m === undefined ? {} : { m }),
    );
  }

  session(sid: string): Promise<Enveloped<Record<string, unknown>>> {
    return this.request("GET", `/sessions/${sid}`);
  }
}
