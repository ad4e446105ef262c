/** Shared wire and model types for the annotator. */

export interface ImagePoint {
  x: number;
  y: number;
}

export type LandmarkMap = Record<string, ImagePoint>;

/** Native landmark document accepted by POST /api/v1/analyses. */
export interface NativeDocument {
  case_id?: string;
  image?: string;
  image_size_px?: [number, number];
  calibration_mm_per_px: number;
  orientation?: "left" | "right" | "unknown";
  landmarks: Record<string, [number, number]>;
}

export interface MeasurementWire {
  id: string;
  value: number;
  unit: string;
  inputs: string[];
}

export interface DeviationWire {
  id: string;
  z: number;
  grade: "LOW" | "NORMAL" | "HIGH";
}

export interface ClassificationWire {
  sagittal: string | null;
  vertical: string | null;
  thresholds: Record<string, number>;
}

export interface AnalysisResponse {
  id: string;
  created_at: string;
  case_id: string;
  measurements: MeasurementWire[];
  skipped: { id: string; code: string; detail: string }[];
  deviations: DeviationWire[];
  classification: ClassificationWire;
  findings: string[];
}

export interface ErrorEnvelope {
  code: string;
  message: string;
  details?: unknown;
}

export interface MeasurementRow {
  id: string;
  value: string; // display-formatted
  unit: string;
  grade: "LOW" | "NORMAL" | "HIGH" | null;
  band: string; // e.g. "NORMAL (z=1.17)" or "ungraded"
}

export interface ChatEntry {
  role: "user" | "assistant";
  content: string;
}

export interface PanelModel {
  analysisId: string;
  rows: MeasurementRow[];
  sagittal: string | null;
  vertical: string | null;
  report: string;
  skipped: string[];
}
