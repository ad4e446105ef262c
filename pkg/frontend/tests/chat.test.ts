import { describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { ChatPane } from "../src/chat.js";
import { fakeService, loadFixture, loadText } from "./helpers.js";

const RESPONSE = loadFixture("case01_response.json");
const REPORT = loadText("case01_report.txt");

function setup(analysisId: string | null, reply = "the ANB angle is fine") {
  const service = fakeService(RESPONSE, REPORT, reply);
  const api = new ApiClient("http://svc.test", service.fetchFn);
  const chat = new ChatPane(api, () => analysisId);
  return { service, chat };
}

describe("ChatPane", () => {
  it("opens a session lazily and appends both sides of the exchange", async () => {
    const { service, chat } = setup("an-1");
    await chat.send("what is the ANB angle?");
    const sessionOpens = service.calls.filter((c) => c.url.endsWith("/api/v1/sessions"));
    expect(sessionOpens.length).toBe(1);
    expect(sessionOpens[0].body).toEqual({ analysis_id: "an-1", lang: "en" });
    expect(chat.transcript.map((e) => e.role)).toEqual(["user", "assistant"]);
  });

  it("reuses the session across messages for the same analysis", async () => {
    const { service, chat } = setup("an-1");
    await chat.send("first");
    await chat.send("second");
    const sessionOpens = service.calls.filter((c) => c.url.endsWith("/api/v1/sessions"));
    expect(sessionOpens.length).toBe(1);
    expect(chat.transcript.map((e) => e.role)).toEqual([
      "user",
      "assistant",
      "user",
      "assistant",
    ]);
  });

  it("rejects empty input client-side without any request", async () => {
    const { service, chat } = setup("an-1");
    await expect(chat.send("   ")).rejects.toThrow(/empty/);
    expect(service.calls.length).toBe(0);
  });

  it("requires an analysis before chatting", async () => {
    const { service, chat } = setup(null);
    await expect(chat.send("hello")).rejects.toThrow(/analysis/);
    expect(service.calls.length).toBe(0);
  });

  it("two sends produce four ordered transcript entries", async () => {
    const { chat } = setup("an-1", "reply!");
    await chat.send("q1");
    await chat.send("q2");
    expect(chat.transcript).toEqual([
      { role: "user", content: "q1" },
      { role: "assistant", content: "reply!" },
      { role: "user", content: "q2" },
      { role: "assistant", content: "reply!" },
    ]);
  });
});
