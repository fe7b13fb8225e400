/**
 * Pure RGBA rendering: heatmap ramp, nearest-neighbor upscale, overlay
 * markers. No canvas access here so every frame is testable byte-for-byte;
 * main.ts only blits the result.
 */

import type { MapPayload, Point, SessionState, PanelId } from "./types.js";

export type Color = readonly [number, number, number];

export const COLORS = {
  scanpath: [255, 255, 255] as Color,
  fixation: [0, 229, 255] as Color, // cross: where gaze is now
  prediction: [57, 255, 20] as Color, // diamond: where the model says it goes next
  groundTruth: [255, 64, 129] as Color,
};

const RAMP_LO: Color = [13, 17, 23];
const RAMP_HI: Color = [255, 201, 60];

/** Linear two-stop ramp between the payload's reported min and max. */
export function heatmapRGBA(map: MapPayload): Uint8ClampedArray {
  const out = new Uint8ClampedArray(map.width * map.height * 4);
  const span = map.max - map.min;
  for (let i = 0; i < map.values.length; i++) {
    const t = span === 0 ? 0.5 : (map.values[i]! - map.min) / span;
    out[i * 4] = RAMP_LO[0] + t * (RAMP_HI[0] - RAMP_LO[0]);
    out[i * 4 + 1] = RAMP_LO[1] + t * (RAMP_HI[1] - RAMP_LO[1]);
    out[i * 4 + 2] = RAMP_LO[2] + t * (RAMP_HI[2] - RAMP_LO[2]);
    out[i * 4 + 3] = 255;
  }
  return out;
}

/** Integer upscale that keeps the working-resolution grid structure honest. */
export function upscaleNearest(
  src: Uint8ClampedArray,
  width: number,
  height: number,
  scale: number,
): Uint8ClampedArray {
  if (!Number.isInteger(scale) || scale < 1) {
    throw new RangeError(`scale must be a positive integer, got ${scale}`);
  }
  const W = width * scale;
  const out = new Uint8ClampedArray(W * height * scale * 4);
  for (let y = 0; y < height * scale; y++) {
    const sy = Math.floor(y / scale);
    for (let x = 0; x < W; x++) {
      const si = (sy * width + Math.floor(x / scale)) * 4;
      const di = (y * W + x) * 4;
      out[di] = src[si]!;
      out[di + 1] = src[si + 1]!;
      out[di + 2] = src[si + 2]!;
      out[di + 3] = src[si + 3]!;
    }
  }
  return out;
}

function setPixel(
  buf: Uint8ClampedArray,
  width: number,
  height: number,
  x: number,
  y: number,
  c: Color,
): void {
  if (x < 0 || y < 0 || x >= width || y >= height) return;
  const i = (y * width + x) * 4;
  buf[i] = c[0];
  buf[i + 1] = c[1];
  buf[i + 2] = c[2];
  buf[i + 3] = 255;
}

export function drawLine(
  buf: Uint8ClampedArray,
  width: number,
  height: number,
  x0: number,
  y0: number,
  x1: number,
  y1: number,
  c: Color,
): void {
  // Bresenham on integer endpoints
  let cx = Math.round(x0);
  let cy = Math.round(y0);
  const ex = Math.round(x1);
  const ey = Math.round(y1);
  const dx = Math.abs(ex - cx);
  const dy = -Math.abs(ey - cy);
  const sx = cx < ex ? 1 : -1;
  const sy = cy < ey ? 1 : -1;
  let err = dx + dy;
  for (;;) {
    setPixel(buf, width, height, cx, cy, c);
    if (cx === ex && cy === ey) break;
    const e2 = 2 * err;
    if (e2 >= dy) {
      err += dy;
      cx += sx;
    }
    if (e2 <= dx) {
      err += dx;
      cy += sy;
    }
  }
}

export function drawCross(
  buf: Uint8ClampedArray,
  width: number,
  height: number,
  cx: number,
  cy: number,
  arm: number,
  c: Color,
): void {
  const x = Math.round(cx);
  const y = Math.round(cy);
  for (let d = -arm; d <= arm; d++) {
    setPixel(buf, width, height, x + d, y, c);
    setPixel(buf, width, height, x, y + d, c);
  }
}

export function drawDiamond(
  buf: Uint8ClampedArray,
  width: number,
  height: number,
  cx: number,
  cy: number,
  r: number,
  c: Color,
): void {
  const x = Math.round(cx);
  const y = Math.round(cy);
  for (let d = 0; d <= r; d++) {
    setPixel(buf, width, height, x + d, y - (r - d), c);
    setPixel(buf, width, height, x + d, y + (r - d), c);
    setPixel(buf, width, height, x - d, y - (r - d), c);
    setPixel(buf, width, height, x - d, y + (r - d), c);
  }
}

/** Center of working pixel p on the scale-x display grid. */
export function workingToDisplay(p: Point, scale: number): Point {
  return { x: (p.x + 0.5) * scale - 0.5, y: (p.y + 0.5) * scale - 0.5 };
}

export interface Frame {
  data: Uint8ClampedArray;
  width: number;
  height: number;
}

export interface Overlays {
  scanpath: boolean;
  prediction: boolean;
  groundTruth?: Point | null;
}

const CROSS_ARM = 5;
const DIAMOND_R = 6;

/** Compose one full frame for a panel at the given integer upscale. */
export function renderFrame(
  state: SessionState,
  panel: PanelId,
  scale: number,
  overlays: Overlays,
): Frame {
  const map = state.maps[panel];
  const width = map.width * scale;
  const height = map.height * scale;
  const data = upscaleNearest(heatmapRGBA(map), map.width, map.height, scale);

  if (overlays.scanpath && state.fixations.length > 0) {
    const pts = state.fixations.map((p) => workingToDisplay(p, scale));
    for (let i = 1; i < pts.length; i++) {
      const a = pts[i - 1]!;
      const b = pts[i]!;
      drawLine(data, width, height, a.x, a.y, b.x, b.y, COLORS.scanpath);
    }
    const last = pts[pts.length - 1]!;
    drawCross(data, width, height, last.x, last.y, CROSS_ARM, COLORS.fixation);
  }
  if (overlays.groundTruth) {
    const g = workingToDisplay(overlays.groundTruth, scale);
    drawCross(data, width, height, g.x, g.y, CROSS_ARM, COLORS.groundTruth);
  }
  if (overlays.prediction) {
    const d = workingToDisplay(state.prediction, scale);
    drawDiamond(data, width, height, d.x, d.y, DIAMOND_R, COLORS.prediction);
  }
  return { data, width, height };
}
