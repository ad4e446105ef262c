import { readFileSync } from "node:fs";
import { join } from "node:path";

import type { FetchLike } from "../src/api.js";
import type { AnalysisResponse } from "../src/types.js";

export function loadFixture(name: string): any {
  return JSON.parse(readFileSync(join(__dirname, "fixtures", name), "utf-8"));
}

export function loadText(name: string): string {
  return readFileSync(join(__dirname, "fixtures", name), "utf-8");
}

export interface RecordedCall {
  url: string;
  method: string;
  body: any;
  signal?: AbortSignal | null;
}

export interface FakeService {
  fetchFn: FetchLike;
  calls: RecordedCall[];
  setAnalysis(response: AnalysisResponse): void;
  setReport(text: string): void;
}

/** Network interception point: a routed stand-in for the analysis service.
 * Every byte the UI displays must originate from these canned responses. */
export function fakeService(
  analysis: AnalysisResponse,
  report: string,
  replyText = "stub reply",
): FakeService {
  let currentAnalysis = analysis;
  let currentReport = report;
  const calls: RecordedCall[] = [];

  const fetchFn: FetchLike = async (url, init) => {
    const method = init?.method ?? "GET";
    const body = init?.body ? JSON.parse(String(init.body)) : null;
    calls.push({ url, method, body, signal: init?.signal ?? null });
    if (method === "POST" && url.endsWith("/api/v1/analyses")) {
      return new Response(JSON.stringify(currentAnalysis), {
        status: 201,
        headers: { "content-type": "application/json" },
      });
    }
    if (method === "GET" && url.includes("/report")) {
      return new Response(currentReport, {
        status: 200,
        headers: { "content-type": "text/plain" },
      });
    }
    if (method === "POST" && url.endsWith("/api/v1/sessions")) {
      return new Response(JSON.stringify({ session_id: "sess-1" }), {
        status: 201,
        headers: { "content-type": "application/json" },
      });
    }
    if (method === "POST" && url.includes("/messages")) {
      return new Response(
        JSON.stringify({ reply: { role: "assistant", content: replyText, timestamp: 0 } }),
        { status: 200, headers: { "content-type": "application/json" } },
      );
    }
    return new Response(JSON.stringify({ code: "NOT_FOUND", message: "no route" }), {
      status: 404,
      headers: { "content-type": "application/json" },
    });
  };

  return {
    fetchFn,
    calls,
    setAnalysis: (r) => {
      currentAnalysis = r;
    },
    setReport: (t) => {
      currentReport = t;
    },
  };
}
