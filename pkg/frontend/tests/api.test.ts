import { describe, expect, it } from "vitest";

import { ApiClient, ApiError } from "../src/api.js";
import { VisitBody } from "../src/model.js";
import { FakeFetch, cycleSteps, errorsFixture, parseAdvice } from "./helpers.js";

const VISIT: VisitBody = { visit_at: "2024-03-01T09:00:00" };

function client(ff: FakeFetch, token?: string): ApiClient {
  const options =
    token === undefined
      ? { baseUrl: "http://svc/", fetchImpl: ff.fetch }
      : { baseUrl: "http://svc/", token, fetchImpl: ff.fetch };
  return new ApiClient(options);
}

describe("ApiClient", () => {
  it("posts advice to the cycle endpoint with the body verbatim", async () => {
    const ff = new FakeFetch();
    const step = cycleSteps()[0]!;
    ff.enqueue("POST", "http://svc/patients/p1/cycles/1/advice", 200, step.response);
    const response = await client(ff).advise("p1", 1, step.request);
    expect(response).toEqual(parseAdvice(step.response));
    const call = ff.calls[0]!;
    expect(call.method).toBe("POST");
    expect(call.url).toBe("http://svc/patients/p1/cycles/1/advice");
    expect(call.headers["content-type"]).toBe("application/json");
    expect(JSON.parse(call.body!)).toEqual(step.request);
  });

  it("marks dry runs with a query parameter", async () => {
    const ff = new FakeFetch();
    const step = cycleSteps()[0]!;
    ff.enqueue("POST", "http://svc/patients/p1/cycles/1/advice?dry_run=true", 200, step.response);
    await client(ff).advise("p1", 1, step.request, true);
    expect(ff.calls[0]!.url).toBe("http://svc/patients/p1/cycles/1/advice?dry_run=true");
  });

  it("sends a bearer token when configured and none otherwise", async () => {
    const ff = new FakeFetch();
    ff.always("GET", "http://svc/health", 200, '{"status":"ok"}');
    await client(ff, "t0k").health();
    expect(ff.calls[0]!.headers["authorization"]).toBe("Bearer t0k");
    await client(ff).health();
    expect(ff.calls[1]!.headers["authorization"]).toBeUndefined();
  });

  it("escapes patient ids in paths", async () => {
    const ff = new FakeFetch();
    ff.always("GET", "http://svc/patients/p%201", 200, '{"patient":{},"cycles":[]}');
    await client(ff).getPatient("p 1");
    expect(ff.calls[0]!.url).toBe("http://svc/patients/p%201");
  });

  it("raises a typed error carrying code, message, and details", async () => {
    const ff = new FakeFetch();
    const terminal = cycleSteps().find((s) => s.status === 410)!;
    ff.enqueue("POST", "http://svc/patients/p1/cycles/1/advice", 410, terminal.response);
    const failure = client(ff)
      .advise("p1", 1, VISIT)
      .then(() => null)
      .catch((e: unknown) => e);
    const error = (await failure) as ApiError;
    expect(error).toBeInstanceOf(ApiError);
    expect(error.status).toBe(410);
    expect(error.code).toBe("terminal_cycle");
    expect(error.message).toBe("cycle is done; no further advice can be given");
    expect(error.details).toEqual([]);
  });

  it("exposes validation detail locations", async () => {
    const ff = new FakeFetch();
    const bad = errorsFixture().bad_hormone;
    ff.enqueue("POST", "http://svc/patients/p1/cycles/1/advice", bad.status, bad.response);
    const error = (await client(ff)
      .advise("p1", 1, VISIT)
      .catch((e: unknown) => e)) as ApiError;
    expect(error.code).toBe("validation");
    expect(error.details[0]!.where).toBe("body.hormones.fsh");
  });

  it("wraps non-JSON failures in a generic error", async () => {
    const ff = new FakeFetch();
    ff.enqueue("GET", "http://svc/health", 500, "boom");
    const error = (await client(ff)
      .health()
      .catch((e: unknown) => e)) as ApiError;
    expect(error.code).toBe("unknown_error");
    expect(error.message).toBe("boom");
  });
});
