/**
 * Browser wiring: DOM events in, rendered frames out. All logic that can
 * live outside the DOM is in api/state/maps/render and covered by tests;
 * this file only glues them to the page.
 */

import { ApiClient } from "./api.js";
import { displayToWorking, nssAt } from "./maps.js";
import { renderFrame } from "./render.js";
import { parseScanpathCsv } from "./scanpath.js";
import { SessionStore } from "./state.js";
import type { ModelParams, PanelId, Point, SessionState } from "./types.js";

const SCALE = 8;

const $ = <T extends HTMLElement>(id: string): T => {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing #${id}`);
  return el as T;
};

const canvas = $<HTMLCanvasElement>("panel");
const banner = $<HTMLDivElement>("banner");
const nssLabel = $<HTMLSpanElement>("nss");
const revLabel = $<HTMLSpanElement>("revision");

const api = new ApiClient("");
const store = new SessionStore(api);

let activePanel: PanelId = "v";
let groundTruth: Point[] = [];
let nextTruth = 0;

function showError(err: unknown): void {
  banner.textContent = err instanceof Error ? err.message : String(err);
  banner.hidden = false;
  setTimeout(() => {
    banner.hidden = true;
  }, 4000);
}

function draw(state: SessionState): void {
  const frame = renderFrame(state, activePanel, SCALE, {
    scanpath: true,
    prediction: true,
    groundTruth: groundTruth[nextTruth] ?? null,
  });
  canvas.width = frame.width;
  canvas.height = frame.height;
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  // copy: ImageData insists on a plain-ArrayBuffer-backed view
  const pixels = new Uint8ClampedArray(frame.data);
  ctx.putImageData(new ImageData(pixels, frame.width, frame.height), 0, 0);
  revLabel.textContent = String(state.revision);
  syncSliders(state.params);
}

store.subscribe(draw);

function syncSliders(params: ModelParams): void {
  for (const key of ["w1", "w2", "sigma"] as const) {
    const input = $<HTMLInputElement>(key);
    if (document.activeElement !== input) input.value = String(params[key]);
  }
  const phis = $<HTMLInputElement>("phis");
  if (document.activeElement !== phis) phis.value = params.phis.join(", ");
}

canvas.addEventListener("click", (ev) => {
  const state = store.current;
  if (!state) return;
  const rect = canvas.getBoundingClientRect();
  const p = displayToWorking(
    ev.clientX - rect.left,
    ev.clientY - rect.top,
    SCALE,
    state.maps.s.width,
    state.maps.s.height,
  );
  store.addFixation(p).catch(showError);
});

$<HTMLButtonElement>("undo").addEventListener("click", () => {
  store.undo().catch(showError);
});

for (const panel of ["s", "c", "e", "v"] as const) {
  $<HTMLButtonElement>(`tab-${panel}`).addEventListener("click", () => {
    activePanel = panel;
    if (store.current) draw(store.current);
  });
}

function commitParams(): void {
  const patch: Partial<ModelParams> = {
    w1: Number($<HTMLInputElement>("w1").value),
    w2: Number($<HTMLInputElement>("w2").value),
    sigma: Number($<HTMLInputElement>("sigma").value),
  };
  const phisText = $<HTMLInputElement>("phis").value.trim();
  if (phisText) {
    patch.phis = phisText.split(",").map((s) => Number(s.trim()));
  }
  store.patchParams(patch).catch(showError);
}
for (const id of ["w1", "w2", "sigma", "phis"]) {
  $<HTMLInputElement>(id).addEventListener("change", commitParams);
}

$<HTMLInputElement>("saliency-file").addEventListener("change", async (ev) => {
  const file = (ev.target as HTMLInputElement).files?.[0];
  if (!file) return;
  const bytes = new Uint8Array(await file.arrayBuffer());
  let binary = "";
  for (const b of bytes) binary += String.fromCharCode(b);
  const params = store.current?.params ?? defaultParams();
  store
    .connect({ saliency: { smr_base64: btoa(binary) }, params })
    .catch(showError);
});

$<HTMLInputElement>("scanpath-file").addEventListener("change", async (ev) => {
  const file = (ev.target as HTMLInputElement).files?.[0];
  if (!file) return;
  try {
    groundTruth = parseScanpathCsv(await file.text());
    nextTruth = 0;
    $<HTMLButtonElement>("step").disabled = groundTruth.length === 0;
    if (store.current) draw(store.current);
  } catch (err) {
    showError(err);
  }
});

// step-through: score the upcoming real fixation on the current value
// map, then advance the session to it
$<HTMLButtonElement>("step").addEventListener("click", () => {
  const state = store.current;
  const target = groundTruth[nextTruth];
  if (!state || !target) return;
  const score = nssAt(state.maps.v, target);
  nssLabel.textContent = score === null ? "undefined (flat map)" : score.toFixed(4);
  nextTruth += 1;
  store.addFixation(target).catch(showError);
});

function defaultParams(): ModelParams {
  return {
    w0: 1.0,
    w1: 0.345,
    w2: 2.893,
    sigma: 34.158,
    phis: [1.737, 2.087, 2.022, 2.462, 3.319, 3.376, 4.744, 5.219, 5.218, 4.374],
    phi_indexing: "lag",
  };
}

$<HTMLButtonElement>("demo").addEventListener("click", () => {
  // small synthetic map so the page works without any files at hand
  const width = 64;
  const height = 48;
  const values: number[] = [];
  for (let y = 0; y < height; y++) {
    for (let x = 0; x < width; x++) {
      const a = Math.exp(-((x - 18) ** 2 + (y - 14) ** 2) / 60);
      const b = 0.8 * Math.exp(-((x - 45) ** 2 + (y - 30) ** 2) / 90);
      values.push(0.05 + a + b);
    }
  }
  store
    .connect({
      saliency: { width, height, values },
      params: { ...defaultParams(), sigma: 4.0 },
    })
    .catch(showError);
});
