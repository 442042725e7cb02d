import { afterEach, describe, expect, it, vi } from "vitest";

import { ApiClient, ServiceError } from "../src/api.js";

function jsonResponse(body: unknown, status = 200): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "content-type": "application/json" },
  });
}

afterEach(() => {
  vi.restoreAllMocks();
});

describe("ApiClient request shapes", () => {
  it("creates sessions with grid and seed", async () => {
    const spy = vi
      .spyOn(globalThis, "fetch")
      .mockResolvedValue(jsonResponse({ session_id: "abc" }));
    const api = new ApiClient("http://service:9/");
    const out = await api.createSession({ width: 4, height: 3, cell_size: 100 }, 7);
    expect(out.session_id).toBe("abc");
    const [url, init] = spy.mock.calls[0];
    expect(url).toBe("http://service:9/sessions");
    expect(init?.method).toBe("POST");
    expect(JSON.parse(init?.body as string)).toEqual({
      grid: { width: 4, height: 3, cell_size: 100 },
      seed: 7,
    });
  });

  it("puts policies with kind and params", async () => {
    const spy = vi.spyOn(globalThis, "fetch").mockResolvedValue(
      jsonResponse({ nodes: [0, 1], edges: [[0, 1]], epoch: 1, reason: "baseline" }),
    );
    const api = new ApiClient("http://s");
    const doc = await api.putPolicy("sid", "custom", { edges: [[0, 1]] });
    expect(doc.edges).toEqual([[0, 1]]);
    const [url, init] = spy.mock.calls[0];
    expect(url).toBe("http://s/sessions/sid/policy");
    expect(init?.method).toBe("PUT");
    expect(JSON.parse(init?.body as string)).toEqual({
      kind: "custom",
      params: { edges: [[0, 1]] },
    });
  });

  it("builds stream query strings", async () => {
    const spy = vi
      .spyOn(globalThis, "fetch")
      .mockImplementation(async () => jsonResponse({ start: 0, end: 4, records: [] }));
    const api = new ApiClient("http://s");
    await api.stream("sid", 0, 4);
    expect(spy.mock.calls[0][0]).toBe("http://s/sessions/sid/stream?start=0&end=4");
    await api.stream("sid", 2);
    expect(spy.mock.calls[1][0]).toBe("http://s/sessions/sid/stream?start=2");
  });

  it("sends trace bodies with patient_id", async () => {
    const spy = vi.spyOn(globalThis, "fetch").mockResolvedValue(
      jsonResponse({
        patient: 0,
        contacts: [],
        at_risk: [],
        infected_cells: [],
        disclosures: [],
        log: [],
      }),
    );
    const api = new ApiClient("http://s");
    await api.trace("sid", 3);
    expect(JSON.parse(spy.mock.calls[0][1]?.body as string)).toEqual({ patient_id: 3 });
  });
});

describe("ServiceError", () => {
  it("carries the machine-readable body", async () => {
    vi.spyOn(globalThis, "fetch").mockResolvedValue(
      jsonResponse({ error_code: "bad_cell", message: "cell 9 missing", field: "cell" }, 400),
    );
    const api = new ApiClient("http://s");
    const err = await api.perturb("sid", 9, 1.0).catch((e) => e as ServiceError);
    expect(err).toBeInstanceOf(ServiceError);
    expect((err as ServiceError).code).toBe("bad_cell");
    expect((err as ServiceError).field).toBe("cell");
    expect((err as ServiceError).status).toBe(400);
  });

  it("falls back when the body is not JSON", async () => {
    vi.spyOn(globalThis, "fetch").mockResolvedValue(
      new Response("boom", { status: 502, statusText: "Bad Gateway" }),
    );
    const api = new ApiClient("http://s");
    const err = await api.metrics("sid").catch((e) => e as ServiceError);
    expect((err as ServiceError).code).toBe("http_502");
  });
});
