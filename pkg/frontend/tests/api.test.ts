import { describe, expect, it } from "vitest";

import { AnalysisClient, ServiceError } from "../src/api.js";

const EMPTY_REPORT = JSON.stringify({
  version: "report/1",
  model: { nodes: 0, flows: 0, tfgs: 0 },
  constraints: [],
  nodeViolations: {},
});

function delayed(response: string, ms: number, status = 200) {
  return new Promise<Response>((resolve) =>
    setTimeout(() => resolve(new Response(response, { status })), ms),
  );
}

describe("AnalysisClient", () => {
  it("drops responses of superseded analyze requests", async () => {
    let call = 0;
    const client = new AnalysisClient("", async () => {
      call += 1;
      return delayed(EMPTY_REPORT, call === 1 ? 40 : 5);
    });
    const first = client.analyze({}, []);
    const second = client.analyze({}, []);
    expect(await second).not.toBeNull();
    expect(await first).toBeNull();
  });

  it("maps error payloads to ServiceError with status", async () => {
    const client = new AnalysisClient("", async () =>
      new Response(JSON.stringify({ error: "cycle detected" }), { status: 422 }),
    );
    await expect(client.analyze({}, [])).rejects.toThrowError(ServiceError);
    await expect(client.analyze({}, [])).rejects.toMatchObject({
      message: "cycle detected",
      status: 422,
    });
  });

  it("health resolves false when the service is unreachable", async () => {
    const client = new AnalysisClient("", async () => {
      throw new TypeError("fetch failed");
    });
    expect(await client.health()).toBe(false);
  });

  it("checkAssignment passes the behavior context through", async () => {
    let seenBody: unknown;
    const client = new AnalysisClient("", async (_url, init) => {
      seenBody = JSON.parse(String(init?.body));
      return new Response(JSON.stringify({ diagnostics: [], compiled: [] }));
    });
    const result = await client.checkAssignment("forward a", ["a"], { T: ["X"] });
    expect(result.diagnostics).toEqual([]);
    expect(seenBody).toEqual({
      text: "forward a",
      inputs: ["a"],
      labelTypes: { T: ["X"] },
    });
  });
});
