// Thin typed client over the gateway's request endpoints. Every state-changing
// call can carry an idempotency key so a retried request is applied once.

import type {
  CatalogEntry,
  ChatResult,
  DiagnosticsDoc,
  PlanDoc,
  ReportDoc,
  SpaceSchema,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    public status: number,
    public detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
  }
}

async function request<T>(
  url: string,
  init: RequestInit = {},
  idempotencyKey?: string,
): Promise<T> {
  const headers: Record<string, string> = {
    "content-type": "application/json",
    ...(init.headers as Record<string, string> | undefined),
  };
  if (idempotencyKey) headers["idempotency-key"] = idempotencyKey;
  const resp = await fetch(url, { ...init, headers });
  const body = await resp.json().catch(() => ({}));
  if (!resp.ok) {
    throw new ApiError(resp.status, String(body.detail ?? resp.statusText));
  }
  return body as T;
}

export class ApiClient {
  constructor(public baseUrl: string) {}

  private url(path: string): string {
    return this.baseUrl.replace(/\/$/, "") + path;
  }

  chat(
    text: string,
    session = "web",
    opts: { ts?: string; skipExtraction?: boolean; key?: string } = {},
  ): Promise<ChatResult> {
    return request(
      this.url("/chat"),
      {
        method: "POST",
        body: JSON.stringify({
          text,
          session,
          ts: opts.ts ?? null,
          skip_extraction: opts.skipExtraction ?? false,
        }),
      },
      opts.key,
    );
  }

  getPlan(day: string): Promise<PlanDoc> {
    return request(this.url(`/plan/${day}`));
  }

  draftPlan(day: string, ts?: string): Promise<{ plan: PlanDoc }> {
    return request(this.url(`/plan/${day}/draft`), {
      method: "POST",
      body: JSON.stringify({ ts: ts ?? null }),
    });
  }

  decidePlan(
    day: string,
    decision: Record<string, unknown>,
    ts?: string,
  ): Promise<{ result: string; plan: PlanDoc }> {
    return request(this.url(`/plan/${day}`), {
      method: "POST",
      body: JSON.stringify({ decision, ts: ts ?? null }),
    });
  }

  align(
    taskId: string,
    answers: Record<string, string>,
    ts?: string,
  ): Promise<{ result: string; status?: string; missing?: string[] }> {
    return request(this.url(`/align/${taskId}`), {
      method: "POST",
      body: JSON.stringify({ answers, ts: ts ?? null }),
    });
  }

  invoke(
    space: string,
    node: string,
    args: Record<string, unknown>,
    ts?: string,
  ): Promise<{ result: Record<string, unknown> }> {
    return request(this.url(`/spaces/${space}/${node}`), {
      method: "POST",
      body: JSON.stringify({ args, ts: ts ?? null }),
    });
  }

  getCatalog(): Promise<{ catalog: CatalogEntry[] }> {
    return request(this.url("/spaces"));
  }

  getSpaceSchema(space: string): Promise<SpaceSchema> {
    return request(this.url(`/spaces/${space}`));
  }

  registerSpace(
    manifest: Record<string, unknown>,
    ts?: string,
  ): Promise<{ path: string[] }> {
    return request(this.url("/spaces"), {
      method: "POST",
      body: JSON.stringify({ manifest, ts: ts ?? null }),
    });
  }

  getReport(day: string): Promise<ReportDoc> {
    return request(this.url(`/report/${day}`));
  }

  getDiagnostics(): Promise<DiagnosticsDoc> {
    return request(this.url("/diagnostics"));
  }

  getLatency(taskId: string): Promise<{
    task_id: string;
    routes: Record<string, number>;
    total_s: number;
  }> {
    return request(this.url(`/latency/${taskId}`));
  }

  tick(ts?: string): Promise<{ fired: Record<string, unknown>[] }> {
    return request(this.url("/tick"), {
      method: "POST",
      body: JSON.stringify({ ts: ts ?? null }),
    });
  }

  eventsUrl(after = 0): string {
    return this.url(`/events?after=${after}`);
  }
}
