/** Chat pane: lazily opens a session bound to the current analysis and keeps
 * an ordered transcript. */

import { ApiClient } from "./api.js";
import type { ChatEntry } from "./types.js";

export class ChatPane {
  transcript: ChatEntry[] = [];
  private sessionId: string | null = null;
  private sessionAnalysisId: string | null = null;

  constructor(
    private api: ApiClient,
    private getAnalysisId: () => string | null,
    private lang = "en",
  ) {}

  /** Sends one message; rejects empty input client-side without a request. */
  async send(text: string): Promise<ChatEntry> {
    const trimmed = text.trim();
    if (!trimmed) {
      throw new Error("message must not be empty");
    }
    const analysisId = this.getAnalysisId();
    if (analysisId === null) {
      throw new Error("run an analysis before chatting");
    }
    if (this.sessionId === null || this.sessionAnalysisId !== analysisId) {
      this.sessionId = await this.api.openSession(analysisId, this.lang);
      this.sessionAnalysisId = analysisId;
    }
    this.transcript.push({ role: "user", content: trimmed });
    const reply = await this.api.sendMessage(this.sessionId, trimmed);
    const entry: ChatEntry = { role: "assistant", content: reply };
    this.transcript.push(entry);
    return entry;
  }
}
