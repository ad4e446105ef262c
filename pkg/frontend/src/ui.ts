/** DOM wiring for the annotator page. All measurement numbers rendered here
 * come from PanelModel, i.e. straight from service responses. */

import { ApiClient } from "./api.js";
import { ChatPane } from "./chat.js";
import { AnalysisController } from "./controller.js";
import { LANDMARKS } from "./landmarks.js";
import { AnnotationState, ImportError } from "./state.js";
import { imageToDisplay, pan, zoomAt } from "./transform.js";
import type { PanelModel } from "./types.js";

const HIT_RADIUS_PX = 8;

export class AnnotatorApp {
  state = new AnnotationState();
  api: ApiClient;
  controller: AnalysisController;
  chat: ChatPane;
  private image: HTMLImageElement | null = null;
  private dragging: string | null = null;
  private lastPointer: { x: number; y: number } | null = null;
  private panning = false;

  constructor(
    private root: Document,
    baseUrl: string,
  ) {
    this.api = new ApiClient(baseUrl);
    this.controller = new AnalysisController(this.state, this.api, {
      onPanel: (panel) => this.renderPanel(panel),
      onError: (message) => this.setStatus(message, true),
      onSkipped: () => this.setStatus("landmarks unchanged; analysis skipped"),
    });
    this.chat = new ChatPane(this.api, () => this.state.lastAnalysisId);
  }

  private el<T extends HTMLElement>(id: string): T {
    const node = this.root.getElementById(id);
    if (!node) throw new Error(`missing element #${id}`);
    return node as T;
  }

  mount(): void {
    const canvas = this.el<HTMLCanvasElement>("canvas");
    canvas.addEventListener("pointerdown", (e) => this.onPointerDown(e));
    canvas.addEventListener("pointermove", (e) => this.onPointerMove(e));
    canvas.addEventListener("pointerup", (e) => this.onPointerUp(e));
    canvas.addEventListener("wheel", (e) => this.onWheel(e), { passive: false });

    const palette = this.el<HTMLSelectElement>("palette");
    for (const landmark of LANDMARKS) {
      const option = this.root.createElement("option");
      option.value = landmark.id;
      option.textContent = `${landmark.id} — ${landmark.label}`;
      palette.appendChild(option);
    }
    palette.addEventListener("change", () => {
      this.state.selected = palette.value || null;
    });
    this.state.selected = palette.value || LANDMARKS[0].id;

    this.el<HTMLInputElement>("calibration").addEventListener("change", (e) => {
      const value = Number((e.target as HTMLInputElement).value);
      this.state.calibration = Number.isFinite(value) && value > 0 ? value : null;
    });

    this.el<HTMLButtonElement>("analyze").addEventListener("click", () => {
      void this.controller.runNow();
    });
    this.el<HTMLButtonElement>("export").addEventListener("click", () => this.exportFile());
    this.el<HTMLInputElement>("import").addEventListener("change", (e) => {
      const input = e.target as HTMLInputElement;
      if (input.files && input.files[0]) void this.importFile(input.files[0]);
      input.value = "";
    });
    this.el<HTMLInputElement>("image-file").addEventListener("change", (e) => {
      const input = e.target as HTMLInputElement;
      if (input.files && input.files[0]) this.loadImage(input.files[0]);
      input.value = "";
    });

    const chatForm = this.el<HTMLFormElement>("chat-form");
    chatForm.addEventListener("submit", (e) => {
      e.preventDefault();
      void this.sendChat();
    });

    this.redraw();
  }

  private canvasPoint(e: PointerEvent): { x: number; y: number } {
    const rect = (e.target as HTMLCanvasElement).getBoundingClientRect();
    return { x: e.clientX - rect.left, y: e.clientY - rect.top };
  }

  private hitTest(display: { x: number; y: number }): string | null {
    for (const [id, p] of Object.entries(this.state.landmarks)) {
      const d = imageToDisplay(this.state.transform, p);
      if (Math.abs(d.x - display.x) <= HIT_RADIUS_PX && Math.abs(d.y - display.y) <= HIT_RADIUS_PX) {
        return id;
      }
    }
    return null;
  }

  private onPointerDown(e: PointerEvent): void {
    const point = this.canvasPoint(e);
    if (e.shiftKey) {
      this.panning = true;
      this.lastPointer = point;
      return;
    }
    const hit = this.hitTest(point);
    if (hit) {
      this.dragging = hit;
      this.lastPointer = point;
    } else if (this.state.selected) {
      this.state.placeOrDrag(this.state.selected, point);
      this.redraw();
      this.controller.requestAnalysis();
    }
  }

  private onPointerMove(e: PointerEvent): void {
    if (!this.lastPointer) return;
    const point = this.canvasPoint(e);
    const dx = point.x - this.lastPointer.x;
    const dy = point.y - this.lastPointer.y;
    this.lastPointer = point;
    if (this.panning) {
      this.state.transform = pan(this.state.transform, dx, dy);
    } else if (this.dragging) {
      this.state.dragBy(this.dragging, dx, dy);
    }
    this.redraw();
  }

  private onPointerUp(_e: PointerEvent): void {
    const wasDragging = this.dragging !== null;
    this.dragging = null;
    this.panning = false;
    this.lastPointer = null;
    if (wasDragging) this.controller.requestAnalysis();
  }

  private onWheel(e: WheelEvent): void {
    e.preventDefault();
    const rect = (e.target as HTMLCanvasElement).getBoundingClientRect();
    const pivot = { x: e.clientX - rect.left, y: e.clientY - rect.top };
    const factor = e.deltaY < 0 ? 1.2 : 1 / 1.2;
    this.state.transform = zoomAt(this.state.transform, factor, pivot);
    this.redraw();
  }

  private loadImage(file: File): void {
    const url = URL.createObjectURL(file);
    const image = new Image();
    image.onload = () => {
      this.image = image;
      this.state.imageRef = file.name;
      this.state.imageSize = [image.naturalWidth, image.naturalHeight];
      this.redraw();
    };
    image.src = url;
  }

  private async importFile(file: File): Promise<void> {
    try {
      const doc: unknown = JSON.parse(await file.text());
      this.state.importDocument(doc);
      const calibration = this.el<HTMLInputElement>("calibration");
      calibration.value = String(this.state.calibration ?? "");
      this.setStatus(`imported ${Object.keys(this.state.landmarks).length} landmarks`);
      this.redraw();
      this.controller.requestAnalysis();
    } catch (error) {
      const message = error instanceof ImportError ? error.message : "file is not valid JSON";
      this.setStatus(`import failed: ${message}`, true);
    }
  }

  private exportFile(): void {
    try {
      const doc = this.state.exportDocument();
      const blob = new Blob([JSON.stringify(doc, null, 2) + "\n"], { type: "application/json" });
      const anchor = this.root.createElement("a");
      anchor.href = URL.createObjectURL(blob);
      anchor.download = `${doc.case_id ?? "annotated"}.json`;
      anchor.click();
    } catch (error) {
      this.setStatus(`export failed: ${(error as Error).message}`, true);
    }
  }

  private async sendChat(): Promise<void> {
    const input = this.el<HTMLInputElement>("chat-input");
    const text = input.value;
    if (!text.trim()) return;
    input.value = "";
    try {
      await this.chat.send(text);
    } catch (error) {
      this.setStatus((error as Error).message, true);
    }
    this.renderChat();
  }

  private setStatus(message: string, isError = false): void {
    const status = this.el<HTMLElement>("status");
    status.textContent = message;
    status.className = isError ? "status error" : "status";
  }

  renderPanel(panel: PanelModel): void {
    const tbody = this.el<HTMLElement>("measurement-rows");
    tbody.textContent = "";
    for (const row of panel.rows) {
      const tr = this.root.createElement("tr");
      if (row.grade) tr.className = `grade-${row.grade.toLowerCase()}`;
      for (const cell of [row.id, row.value, row.unit, row.band]) {
        const td = this.root.createElement("td");
        td.textContent = cell;
        tr.appendChild(td);
      }
      tbody.appendChild(tr);
    }
    this.el<HTMLElement>("badge").textContent =
      `${panel.sagittal ?? "—"} / ${panel.vertical ?? "—"}`;
    this.el<HTMLElement>("report").textContent = panel.report;
    this.setStatus(`analysis ${panel.analysisId} complete`);
  }

  renderChat(): void {
    const log = this.el<HTMLElement>("chat-log");
    log.textContent = "";
    for (const entry of this.chat.transcript) {
      const div = this.root.createElement("div");
      div.className = `chat-${entry.role}`;
      div.textContent = `${entry.role === "user" ? "You" : "Assistant"}: ${entry.content}`;
      log.appendChild(div);
    }
    log.scrollTop = log.scrollHeight;
  }

  redraw(): void {
    const canvas = this.el<HTMLCanvasElement>("canvas");
    const ctx = canvas.getContext("2d");
    if (!ctx) return;
    ctx.clearRect(0, 0, canvas.width, canvas.height);
    const t = this.state.transform;
    if (this.image) {
      ctx.save();
      ctx.translate(t.offsetX, t.offsetY);
      ctx.scale(t.scale, t.scale);
      ctx.drawImage(this.image, 0, 0);
      ctx.restore();
    }
    ctx.font = "11px sans-serif";
    for (const [id, p] of Object.entries(this.state.landmarks)) {
      const d = imageToDisplay(t, p);
      ctx.fillStyle = id === this.state.selected ? "#d62728" : "#1f77b4";
      ctx.beginPath();
      ctx.arc(d.x, d.y, 4, 0, 2 * Math.PI);
      ctx.fill();
      ctx.fillText(id, d.x + 6, d.y - 6);
    }
  }
}
