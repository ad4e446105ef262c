/** Display <-> image coordinate mapping.
 *
 * Landmarks live in image-pixel space; the view transform only affects how
 * they are drawn. scale is display-pixels per image-pixel.
 */

import type { ImagePoint } from "./types.js";

export interface ViewTransform {
  scale: number;
  offsetX: number;
  offsetY: number;
}

export const MIN_ZOOM = 0.25;
export const MAX_ZOOM = 8;

export function identityTransform(): ViewTransform {
  return { scale: 1, offsetX: 0, offsetY: 0 };
}

export function displayToImage(t: ViewTransform, p: ImagePoint): ImagePoint {
  return { x: (p.x - t.offsetX) / t.scale, y: (p.y - t.offsetY) / t.scale };
}

export function imageToDisplay(t: ViewTransform, p: ImagePoint): ImagePoint {
  return { x: p.x * t.scale + t.offsetX, y: p.y * t.scale + t.offsetY };
}

/** Zoom by a factor keeping the given display point fixed on screen. */
export function zoomAt(t: ViewTransform, factor: number, pivot: ImagePoint): ViewTransform {
  const scale = Math.min(MAX_ZOOM, Math.max(MIN_ZOOM, t.scale * factor));
  const applied = scale / t.scale;
  return {
    scale,
    offsetX: pivot.x - (pivot.x - t.offsetX) * applied,
    offsetY: pivot.y - (pivot.y - t.offsetY) * applied,
  };
}

export function pan(t: ViewTransform, dx: number, dy: number): ViewTransform {
  return { scale: t.scale, offsetX: t.offsetX + dx, offsetY: t.offsetY + dy };
}
