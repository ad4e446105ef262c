/** Analysis scheduling: debounced re-analysis with a single in-flight
 * request where the latest edit always wins. */

import { ApiClient, ApiError } from "./api.js";
import { buildPanelModel } from "./panel.js";
import { AnnotationState } from "./state.js";
import type { PanelModel } from "./types.js";

export interface ControllerEvents {
  onPanel?: (panel: PanelModel) => void;
  onError?: (message: string) => void;
  onSkipped?: () => void;
}

export class AnalysisController {
  private timer: ReturnType<typeof setTimeout> | null = null;
  private inFlight: AbortController | null = null;
  private generation = 0;

  constructor(
    private state: AnnotationState,
    private api: ApiClient,
    private events: ControllerEvents = {},
    public debounceMs = 250,
    private lang = "en",
  ) {}

  /** Debounced entry point, call on drag-end / placement. */
  requestAnalysis(): void {
    if (this.timer !== null) clearTimeout(this.timer);
    this.timer = setTimeout(() => {
      this.timer = null;
      void this.runNow();
    }, this.debounceMs);
  }

  /** Immediate analysis; skips when nothing changed since the last run. */
  async runNow(): Promise<PanelModel | null> {
    if (!this.state.dirty && this.state.lastAnalysis !== null) {
      this.events.onSkipped?.();
      return null;
    }
    if (this.state.calibration === null || !(this.state.calibration > 0)) {
      this.events.onError?.("calibration (mm per pixel) is required before analysis");
      return null;
    }
    let doc;
    try {
      doc = this.state.exportDocument();
    } catch (error) {
      this.events.onError?.(String((error as Error).message ?? error));
      return null;
    }

    // the newest request supersedes and cancels any in-flight one
    this.inFlight?.abort();
    const controller = new AbortController();
    this.inFlight = controller;
    const myGeneration = ++this.generation;

    try {
      const response = await this.api.analyze(doc, controller.signal);
      if (myGeneration !== this.generation) return null; // superseded
      const report = await this.api.report(response.id, this.lang, "text");
      if (myGeneration !== this.generation) return null;
      this.state.markAnalyzed(response);
      const panel = buildPanelModel(response, report);
      this.events.onPanel?.(panel);
      return panel;
    } catch (error) {
      if (controller.signal.aborted || myGeneration !== this.generation) {
        return null; // cancelled by a newer edit
      }
      if (error instanceof ApiError) {
        this.events.onError?.(`${error.envelope.code}: ${error.envelope.message}`);
      } else {
        this.events.onError?.(String((error as Error).message ?? error));
      }
      return null;
    } finally {
      if (this.inFlight === controller) this.inFlight = null;
    }
  }

  get hasInFlight(): boolean {
    return this.inFlight !== null;
  }
}
