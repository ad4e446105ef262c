/** Thin typed client over the analysis service. All numbers displayed by the
 * UI originate from these responses; the client never computes geometry. */

import type { AnalysisResponse, ErrorEnvelope, NativeDocument } from "./types.js";

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    public status: number,
    public envelope: ErrorEnvelope,
  ) {
    super(`${envelope.code}: ${envelope.message}`);
  }
}

async function envelopeFrom(response: Response): Promise<ErrorEnvelope> {
  try {
    const body = (await response.json()) as ErrorEnvelope;
    if (typeof body?.code === "string" && typeof body?.message === "string") return body;
  } catch {
    /* non-JSON error body */
  }
  return { code: `HTTP_${response.status}`, message: response.statusText || "request failed" };
}

export class ApiClient {
  constructor(
    public baseUrl: string,
    private fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private url(path: string): string {
    return this.baseUrl.replace(/\/$/, "") + path;
  }

  private async request(path: string, init?: RequestInit): Promise<Response> {
    const response = await this.fetchFn(this.url(path), init);
    if (!response.ok) {
      throw new ApiError(response.status, await envelopeFrom(response));
    }
    return response;
  }

  async analyze(doc: NativeDocument, signal?: AbortSignal): Promise<AnalysisResponse> {
    const response = await this.request("/api/v1/analyses", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(doc),
      signal,
    });
    return (await response.json()) as AnalysisResponse;
  }

  async report(analysisId: string, lang: string, format = "text"): Promise<string> {
    const response = await this.request(
      `/api/v1/analyses/${analysisId}/report?lang=${lang}&format=${format}`,
    );
    return await response.text();
  }

  async openSession(analysisId: string, lang: string): Promise<string> {
    const response = await this.request("/api/v1/sessions", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ analysis_id: analysisId, lang }),
    });
    return ((await response.json()) as { session_id: string }).session_id;
  }

  async sendMessage(sessionId: string, content: string): Promise<string> {
    const response = await this.request(`/api/v1/sessions/${sessionId}/messages`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ content }),
    });
    const body = (await response.json()) as { reply: { content: string } };
    return body.reply.content;
  }

  async health(): Promise<{ status: string; version: string; backend_enabled: boolean }> {
    const response = await this.request("/healthz");
    return await response.json();
  }
}
