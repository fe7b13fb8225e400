/** Wire types mirroring the session service JSON payloads. */

export interface ModelParams {
  w0: number;
  w1: number;
  w2: number;
  sigma: number;
  phis: number[];
  phi_indexing: "lag" | "absolute";
}

export interface MapPayload {
  width: number;
  height: number;
  /** Row-major, length width*height. */
  values: number[];
  min: number;
  max: number;
}

export interface Point {
  x: number;
  y: number;
}

export type PanelId = "s" | "c" | "e" | "v";

export interface SessionState {
  revision: number;
  fixations: Point[];
  params: ModelParams;
  maps: Record<PanelId, MapPayload>;
  prediction: Point;
}

export interface SaliencyBody {
  width?: number;
  height?: number;
  values?: number[];
  smr_base64?: string;
}

export interface CreateSessionBody {
  saliency: SaliencyBody;
  params: ModelParams;
  profile?: unknown;
}
