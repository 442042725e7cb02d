// Thin typed client for the session service. Every method maps 1:1 to
// an endpoint; failures throw ServiceError carrying the server's
// machine-readable body.

import type {
  ApiError,
  AuditReport,
  GridSpec,
  Metrics,
  PolicyDoc,
  PolicyKind,
  StreamPage,
  TraceResult,
} from "./types.js";

export class ServiceError extends Error {
  readonly status: number;
  readonly code: string;
  readonly field: string | null;

  constructor(status: number, body: ApiError) {
    super(body.message);
    this.status = status;
    this.code = body.error_code;
    this.field = body.field;
  }
}

async function request<T>(url: string, init?: RequestInit): Promise<T> {
  const resp = await fetch(url, {
    headers: { "content-type": "application/json" },
    ...init,
  });
  if (!resp.ok) {
    let body: ApiError;
    try {
      body = (await resp.json()) as ApiError;
    } catch {
      body = { error_code: "http_" + resp.status, message: resp.statusText, field: null };
    }
    throw new ServiceError(resp.status, body);
  }
  return (await resp.json()) as T;
}

export class ApiClient {
  constructor(readonly baseUrl: string) {}

  private url(path: string): string {
    return this.baseUrl.replace(/\/$/, "") + path;
  }

  createSession(grid: GridSpec, seed: number): Promise<{ session_id: string }> {
    return request(this.url("/sessions"), {
      method: "POST",
      body: JSON.stringify({ grid, seed }),
    });
  }

  putPolicy(sid: string, kind: PolicyKind, params: object = {}): Promise<PolicyDoc> {
    return request(this.url(`/sessions/${sid}/policy`), {
      method: "PUT",
      body: JSON.stringify({ kind, params }),
    });
  }

  getPolicy(sid: string): Promise<PolicyDoc> {
    return request(this.url(`/sessions/${sid}/policy`));
  }

  rejectPolicy(sid: string): Promise<{ cleared: boolean; epoch: number }> {
    return request(this.url(`/sessions/${sid}/reject-policy`), { method: "POST" });
  }

  perturb(sid: string, cell: number, epsilon: number): Promise<{ released_cell: number }> {
    return request(this.url(`/sessions/${sid}/perturb`), {
      method: "POST",
      body: JSON.stringify({ cell, epsilon }),
    });
  }

  audit(
    sid: string,
    epsilon: number,
    check: "policy" | "infinity" | "geo" | "set",
    extra: { cells?: number[]; mechanism?: "exponential" | "identity" } = {},
  ): Promise<AuditReport> {
    return request(this.url(`/sessions/${sid}/audit`), {
      method: "POST",
      body: JSON.stringify({ epsilon, check, ...extra }),
    });
  }

  simulate(
    sid: string,
    ticks: number,
    opts: { users?: number; epsilon?: number; ticks_per_day?: number } = {},
  ): Promise<{ start: number; end: number }> {
    return request(this.url(`/sessions/${sid}/simulate`), {
      method: "POST",
      body: JSON.stringify({ ticks, ...opts }),
    });
  }

  trace(sid: string, patientId: number): Promise<TraceResult> {
    return request(this.url(`/sessions/${sid}/trace`), {
      method: "POST",
      body: JSON.stringify({ patient_id: patientId }),
    });
  }

  metrics(sid: string): Promise<Metrics> {
    return request(this.url(`/sessions/${sid}/metrics`));
  }

  stream(sid: string, start = 0, end?: number): Promise<StreamPage> {
    const range = end === undefined ? `?start=${start}` : `?start=${start}&end=${end}`;
    return request(this.url(`/sessions/${sid}/stream${range}`));
  }
}
