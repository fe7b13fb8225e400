/** Thin typed client for the session service; all state lives server-side. */

import type { CreateSessionBody, ModelParams, SessionState } from "./types.js";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

async function parseOrThrow<T>(resp: Response): Promise<T> {
  if (resp.ok) {
    return (await resp.json()) as T;
  }
  let detail = resp.statusText;
  try {
    const body = (await resp.json()) as { detail?: unknown };
    if (typeof body.detail === "string") detail = body.detail;
  } catch {
    // non-JSON error body; keep the status text
  }
  throw new ApiError(resp.status, detail);
}

/** What the store needs from a transport; ApiClient is the real one. */
export interface SessionApi {
  createSession(body: CreateSessionBody): Promise<{ id: string; revision: number }>;
  getSession(id: string): Promise<SessionState>;
  appendFixation(
    id: string,
    x: number,
    y: number,
    expectedRevision?: number,
  ): Promise<SessionState>;
  undoFixation(id: string): Promise<SessionState>;
  patchParams(id: string, patch: Partial<ModelParams>): Promise<SessionState>;
}

export class ApiClient implements SessionApi {
  private readonly fetchImpl: typeof fetch;

  constructor(
    private readonly base: string,
    fetchImpl?: typeof fetch,
  ) {
    // keep the global's own binding; calling an unbound window.fetch throws
    this.fetchImpl = fetchImpl ?? ((input, init) => fetch(input, init));
  }

  private req<T>(path: string, init?: RequestInit): Promise<T> {
    return this.fetchImpl(this.base + path, {
      headers: { "content-type": "application/json" },
      ...init,
    }).then((r) => parseOrThrow<T>(r));
  }

  createSession(body: CreateSessionBody): Promise<{ id: string; revision: number }> {
    return this.req("/sessions", { method: "POST", body: JSON.stringify(body) });
  }

  getSession(id: string): Promise<SessionState> {
    return this.req(`/sessions/${id}`);
  }

  appendFixation(
    id: string,
    x: number,
    y: number,
    expectedRevision?: number,
  ): Promise<SessionState> {
    const body: Record<string, number> = { x, y };
    if (expectedRevision !== undefined) body["expected_revision"] = expectedRevision;
    return this.req(`/sessions/${id}/fixations`, {
      method: "POST",
      body: JSON.stringify(body),
    });
  }

  undoFixation(id: string): Promise<SessionState> {
    return this.req(`/sessions/${id}/fixations/last`, { method: "DELETE" });
  }

  patchParams(id: string, patch: Partial<ModelParams>): Promise<SessionState> {
    return this.req(`/sessions/${id}/params`, {
      method: "PATCH",
      body: JSON.stringify(patch),
    });
  }
}
