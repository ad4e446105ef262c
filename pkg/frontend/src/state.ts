/** Annotation working state.
 *
 * Landmark coordinates are stored in image-pixel space; the display
 * transform never mutates them. The dirty flag is true exactly when the
 * working map differs from the last-analyzed snapshot.
 */

import { LANDMARK_IDS } from "./landmarks.js";
import { displayToImage, identityTransform, ViewTransform } from "./transform.js";
import type { AnalysisResponse, ImagePoint, LandmarkMap, NativeDocument } from "./types.js";

function cloneMap(map: LandmarkMap): LandmarkMap {
  const out: LandmarkMap = {};
  for (const [id, p] of Object.entries(map)) out[id] = { x: p.x, y: p.y };
  return out;
}

function mapsEqual(a: LandmarkMap, b: LandmarkMap): boolean {
  const ka = Object.keys(a);
  const kb = Object.keys(b);
  if (ka.length !== kb.length) return false;
  for (const id of ka) {
    const pa = a[id];
    const pb = b[id];
    if (!pb || pa.x !== pb.x || pa.y !== pb.y) return false;
  }
  return true;
}

export class ImportError extends Error {}

export class AnnotationState {
  imageRef: string | null = null;
  imageSize: [number, number] | null = null;
  transform: ViewTransform = identityTransform();
  landmarks: LandmarkMap = {};
  calibration: number | null = null;
  selected: string | null = null;
  lastAnalysisId: string | null = null;
  lastAnalysis: AnalysisResponse | null = null;
  private analyzedSnapshot: LandmarkMap | null = null;

  get dirty(): boolean {
    if (this.analyzedSnapshot === null) return Object.keys(this.landmarks).length > 0;
    return !mapsEqual(this.landmarks, this.analyzedSnapshot);
  }

  /** Place the selected/chosen landmark from a canvas (display) point. */
  placeOrDrag(id: string, canvasPoint: ImagePoint): ImagePoint {
    if (!LANDMARK_IDS.has(id)) {
      throw new ImportError(`unknown landmark id ${id}`);
    }
    const imagePoint = displayToImage(this.transform, canvasPoint);
    this.landmarks[id] = imagePoint;
    return imagePoint;
  }

  /** Move a landmark by a delta expressed in display pixels. */
  dragBy(id: string, displayDx: number, displayDy: number): ImagePoint {
    const current = this.landmarks[id];
    if (!current) throw new ImportError(`landmark ${id} is not placed`);
    const moved = {
      x: current.x + displayDx / this.transform.scale,
      y: current.y + displayDy / this.transform.scale,
    };
    this.landmarks[id] = moved;
    return moved;
  }

  removeLandmark(id: string): void {
    delete this.landmarks[id];
  }

  markAnalyzed(response: AnalysisResponse): void {
    this.lastAnalysisId = response.id;
    this.lastAnalysis = response;
    this.analyzedSnapshot = cloneMap(this.landmarks);
  }

  exportDocument(caseId = "annotated"): NativeDocument {
    if (this.calibration === null || !(this.calibration > 0)) {
      throw new ImportError("calibration (mm per pixel) must be set and positive");
    }
    const landmarks: Record<string, [number, number]> = {};
    for (const id of Object.keys(this.landmarks).sort()) {
      const p = this.landmarks[id];
      landmarks[id] = [p.x, p.y];
    }
    const doc: NativeDocument = {
      case_id: caseId,
      calibration_mm_per_px: this.calibration,
      orientation: "unknown",
      landmarks,
    };
    if (this.imageRef) doc.image = this.imageRef;
    if (this.imageSize) doc.image_size_px = this.imageSize;
    return doc;
  }

  /** Load a native document; on any validation error the state is unchanged. */
  importDocument(doc: unknown): void {
    if (typeof doc !== "object" || doc === null || Array.isArray(doc)) {
      throw new ImportError("document must be a JSON object");
    }
    const record = doc as Record<string, unknown>;
    const cal = record["calibration_mm_per_px"];
    if (typeof cal !== "number" || !(cal > 0) || !Number.isFinite(cal)) {
      throw new ImportError("calibration_mm_per_px must be a positive number");
    }
    const rawLandmarks = record["landmarks"];
    if (typeof rawLandmarks !== "object" || rawLandmarks === null) {
      throw new ImportError("missing landmarks object");
    }
    const parsed: LandmarkMap = {};
    for (const [id, xy] of Object.entries(rawLandmarks as Record<string, unknown>)) {
      if (!LANDMARK_IDS.has(id)) throw new ImportError(`unknown landmark name ${id}`);
      if (!Array.isArray(xy) || xy.length !== 2) {
        throw new ImportError(`landmark ${id} must be an [x, y] pair`);
      }
      const [x, y] = xy;
      if (typeof x !== "number" || typeof y !== "number" || !Number.isFinite(x) || !Number.isFinite(y)) {
        throw new ImportError(`landmark ${id} has non-numeric coordinates`);
      }
      parsed[id] = { x, y };
    }
    // validation complete; commit
    this.calibration = cal;
    this.landmarks = parsed;
    this.imageRef = typeof record["image"] === "string" ? (record["image"] as string) : null;
    const size = record["image_size_px"];
    this.imageSize =
      Array.isArray(size) && size.length === 2 && typeof size[0] === "number" && typeof size[1] === "number"
        ? [size[0], size[1]]
        : null;
    this.lastAnalysisId = null;
    this.lastAnalysis = null;
    this.analyzedSnapshot = null;
    this.selected = null;
  }
}
