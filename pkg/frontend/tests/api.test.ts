import { describe, expect, it } from "vitest";

import {
  ApiError,
  ConnectionError,
  WorkbenchApi,
  type FetchLike,
} from "../src/api.js";

interface Stubbed {
  status?: number;
  body?: unknown;
  text?: string;
}

function stubFetch(
  handler: (input: string, init?: RequestInit) => Stubbed,
): FetchLike {
  return async (input, init) => {
    const out = handler(input, init);
    const content =
      out.text !== undefined ? out.text : JSON.stringify(out.body ?? null);
    return new Response(content, { status: out.status ?? 200 });
  };
}

describe("WorkbenchApi", () => {
  it("prefixes the base URL and records every exchange", async () => {
    const seen: string[] = [];
    const api = new WorkbenchApi(
      "http://svc:1234/",
      stubFetch((input) => {
        seen.push(input);
        return { body: [{ name: "V_bm" }] };
      }),
    );
    const rows = await api.manifest();
    expect(rows[0]!.name).toBe("V_bm");
    expect(seen).toEqual(["http://svc:1234/manifest"]);
    expect(api.log).toEqual([
      {
        method: "GET",
        path: "/manifest",
        body: null,
        status: 200,
        response: [{ name: "V_bm" }],
      },
    ]);
  });

  it("submits jobs as JSON and returns the new id", async () => {
    let gotBody: unknown;
    let gotType: string | undefined;
    const api = new WorkbenchApi(
      "",
      stubFetch((_input, init) => {
        gotBody = JSON.parse(String(init?.body));
        gotType = (init?.headers as Record<string, string>)["content-type"];
        return { body: { id: "abc123" } };
      }),
    );
    const id = await api.submitJob({ kind: "simulate", dataset_id: "d1" });
    expect(id).toBe("abc123");
    expect(gotType).toBe("application/json");
    expect(gotBody).toEqual({ kind: "simulate", dataset_id: "d1" });
    expect(api.log[0]!.body).toEqual({ kind: "simulate", dataset_id: "d1" });
  });

  it("uploads CSV text verbatim and redacts it in the log", async () => {
    let gotBody: unknown;
    let gotType: string | undefined;
    const api = new WorkbenchApi(
      "",
      stubFetch((_input, init) => {
        gotBody = init?.body;
        gotType = (init?.headers as Record<string, string>)["content-type"];
        return { body: { id: "d1", rows: 2, columns: [], parameters: {} } };
      }),
    );
    await api.uploadDataset("time,plasma\n0,0\n1,1\n");
    expect(gotBody).toBe("time,plasma\n0,0\n1,1\n");
    expect(gotType).toBe("text/csv");
    expect(api.log[0]!.body).toBe("<csv upload>");
  });

  it("returns CSV downloads as raw text and redacts them in the log", async () => {
    const api = new WorkbenchApi(
      "",
      stubFetch(() => ({ text: "a,b\n1,2\n" })),
    );
    const text = await api.resultCsv("j1");
    expect(text).toBe("a,b\n1,2\n");
    expect(api.log[0]!.path).toBe("/jobs/j1/result.csv");
    expect(api.log[0]!.response).toBe("<csv download>");
  });

  it("surfaces structured rejections with row and column intact", async () => {
    const api = new WorkbenchApi(
      "",
      stubFetch(() => ({
        status: 422,
        body: {
          detail: {
            message: "not a number",
            type: "bad_cell",
            row: 7,
            column: "plasma",
          },
        },
      })),
    );
    const err = await api.uploadDataset("x").catch((e: unknown) => e);
    expect(err).toBeInstanceOf(ApiError);
    const apiErr = err as ApiError;
    expect(apiErr.status).toBe(422);
    expect(apiErr.detail.row).toBe(7);
    expect(apiErr.detail.column).toBe("plasma");
    expect(apiErr.message).toBe("not a number");
  });

  it("normalizes string details and request-model detail arrays", async () => {
    const stringApi = new WorkbenchApi(
      "",
      stubFetch(() => ({ status: 404, body: { detail: "no such job" } })),
    );
    const notFound = (await stringApi.job("zz").catch((e: unknown) => e)) as ApiError;
    expect(notFound.detail.message).toBe("no such job");

    const arrayApi = new WorkbenchApi(
      "",
      stubFetch(() => ({
        status: 422,
        body: {
          detail: [{ loc: ["body", "de", "np"], msg: "value is not an integer" }],
        },
      })),
    );
    const invalid = (await arrayApi
      .submitJob({ kind: "simulate", dataset_id: "d" })
      .catch((e: unknown) => e)) as ApiError;
    expect(invalid.detail.message).toContain("value is not an integer");
    expect(invalid.detail.message).toContain("body.de.np");
  });

  it("wraps transport failures in ConnectionError", async () => {
    const api = new WorkbenchApi("", () =>
      Promise.reject(new Error("ECONNREFUSED")),
    );
    const err = await api.ping().catch((e: unknown) => e);
    expect(err).toBeInstanceOf(ConnectionError);
    expect(String(err)).toContain("unreachable");
    // a failed transport never reaches the wire log
    expect(api.log.length).toBe(0);
  });
});
