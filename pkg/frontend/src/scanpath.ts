/** Ground-truth scanpath loading for step-through mode. */

import type { Point } from "./types.js";

/**
 * Accepts either bare "x,y" lines or the dataset CSV with an
 * image_id,subject_id,fixation_index,x,y header (extra columns ignored,
 * rows kept in file order). Coordinates are taken as working-resolution;
 * divide before loading if the file is at original resolution.
 */
export function parseScanpathCsv(text: string): Point[] {
  const lines = text
    .split(/\r?\n/)
    .map((l) => l.trim())
    .filter((l) => l.length > 0);
  if (lines.length === 0) return [];

  let xi = 0;
  let yi = 1;
  let start = 0;
  const first = lines[0]!.split(",").map((c) => c.trim().toLowerCase());
  if (first.includes("x") && first.includes("y")) {
    xi = first.indexOf("x");
    yi = first.indexOf("y");
    start = 1;
  }
  const out: Point[] = [];
  for (let i = start; i < lines.length; i++) {
    const cells = lines[i]!.split(",");
    const x = Number(cells[xi]);
    const y = Number(cells[yi]);
    if (!Number.isFinite(x) || !Number.isFinite(y)) {
      throw new Error(`unparseable scanpath row ${i + 1}: ${lines[i]}`);
    }
    out.push({ x, y });
  }
  return out;
}
