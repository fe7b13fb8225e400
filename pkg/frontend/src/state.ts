/**
 * Client-side session state machine.
 *
 * Mutations queue FIFO with at most one in flight; every applied response
 * carries the server revision and stale frames (revision <= current) are
 * dropped rather than rendered. A 409 on a compare-and-set append means
 * someone else moved the session: the failed mutation is discarded and the
 * current state is refetched.
 */

import { ApiError, type SessionApi } from "./api.js";
import { argmaxRowMajor } from "./maps.js";
import type { CreateSessionBody, ModelParams, Point, SessionState } from "./types.js";

export type Listener = (state: SessionState) => void;

export class ConsistencyError extends Error {}

function checkConsistency(state: SessionState): void {
  // cross-component sanity: our argmax must be the server's prediction
  const local = argmaxRowMajor(state.maps.v.values, state.maps.v.width);
  if (local.x !== state.prediction.x || local.y !== state.prediction.y) {
    throw new ConsistencyError(
      `value argmax (${local.x}, ${local.y}) != ` +
        `server prediction (${state.prediction.x}, ${state.prediction.y})`,
    );
  }
}

export class SessionStore {
  private sessionId: string | null = null;
  private state: SessionState | null = null;
  private queue: Array<() => Promise<void>> = [];
  private inFlight = false;
  private listeners = new Set<Listener>();

  constructor(private readonly api: SessionApi) {}

  get id(): string | null {
    return this.sessionId;
  }

  get current(): SessionState | null {
    return this.state;
  }

  subscribe(fn: Listener): () => void {
    this.listeners.add(fn);
    if (this.state) fn(this.state);
    return () => this.listeners.delete(fn);
  }

  private apply(state: SessionState): void {
    if (this.state && state.revision <= this.state.revision) {
      return; // stale frame, never present it as current
    }
    checkConsistency(state);
    this.state = state;
    for (const fn of this.listeners) fn(state);
  }

  async connect(body: CreateSessionBody): Promise<SessionState> {
    const { id } = await this.api.createSession(body);
    this.sessionId = id;
    this.state = null;
    const state = await this.api.getSession(id);
    this.apply(state);
    return state;
  }

  async refetch(): Promise<void> {
    if (!this.sessionId) return;
    this.apply(await this.api.getSession(this.sessionId));
  }

  /** Queue a mutation; resolves once its response has been applied. */
  private enqueue(run: (id: string) => Promise<SessionState>): Promise<SessionState> {
    return new Promise((resolve, reject) => {
      this.queue.push(async () => {
        const id = this.sessionId;
        if (!id) {
          reject(new Error("no session"));
          return;
        }
        try {
          const state = await run(id);
          this.apply(state);
          resolve(state);
        } catch (err) {
          if (err instanceof ApiError && err.status === 409) {
            await this.refetch(); // stale revision: resync, drop the mutation
          }
          reject(err);
        }
      });
      this.pump();
    });
  }

  private pump(): void {
    if (this.inFlight) return;
    const next = this.queue.shift();
    if (!next) return;
    this.inFlight = true;
    void next().finally(() => {
      this.inFlight = false;
      this.pump();
    });
  }

  addFixation(p: Point): Promise<SessionState> {
    return this.enqueue((id) =>
      this.api.appendFixation(id, p.x, p.y, this.state?.revision),
    );
  }

  undo(): Promise<SessionState> {
    return this.enqueue((id) => this.api.undoFixation(id));
  }

  patchParams(patch: Partial<ModelParams>): Promise<SessionState> {
    return this.enqueue((id) => this.api.patchParams(id, patch));
  }
}
