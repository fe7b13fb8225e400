/** Pure helpers over row-major map value arrays. */

import type { MapPayload, Point } from "./types.js";

/**
 * First-occurrence argmax in row-major order.
 *
 * Matches the server's tie-break, which is what makes the local
 * consistency assertion (diamond == server prediction) exact.
 */
export function argmaxRowMajor(values: readonly number[], width: number): Point {
  let best = -Infinity;
  let at = 0;
  for (let i = 0; i < values.length; i++) {
    const v = values[i]!;
    if (v > best) {
      best = v;
      at = i;
    }
  }
  return { x: at % width, y: Math.floor(at / width) };
}

/** Round-half-up pixel for a continuous coordinate, clamped into the grid. */
export function fixationPixel(map: MapPayload, p: Point): Point {
  const px = Math.min(Math.floor(p.x + 0.5), map.width - 1);
  const py = Math.min(Math.floor(p.y + 0.5), map.height - 1);
  return { x: Math.max(px, 0), y: Math.max(py, 0) };
}

/**
 * Standardized map value at a fixation (population std).
 * Returns null for constant maps, where the score is undefined.
 */
export function nssAt(map: MapPayload, p: Point): number | null {
  const n = map.values.length;
  let mean = 0;
  for (const v of map.values) mean += v;
  mean /= n;
  let varsum = 0;
  for (const v of map.values) varsum += (v - mean) * (v - mean);
  const sd = Math.sqrt(varsum / n);
  if (sd === 0) return null;
  const { x, y } = fixationPixel(map, p);
  return (map.values[y * map.width + x]! - mean) / sd;
}

/**
 * Map a click on the scaled-up canvas back to working-resolution
 * coordinates: the center of display pixel d sits at (d + 0.5)/scale - 0.5
 * in working space. Clamped so edge clicks stay inside the grid.
 */
export function displayToWorking(
  dx: number,
  dy: number,
  scale: number,
  width: number,
  height: number,
): Point {
  const x = Math.min(Math.max((dx + 0.5) / scale - 0.5, 0), width - 1);
  const y = Math.min(Math.max((dy + 0.5) / scale - 0.5, 0), height - 1);
  return { x, y };
}
