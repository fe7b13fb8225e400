import { describe, expect, it } from "vitest";

import { ApiError, type SessionApi } from "../src/api.js";
import { ConsistencyError, SessionStore } from "../src/state.js";
import type {
  CreateSessionBody,
  ModelParams,
  Point,
  SessionState,
} from "../src/types.js";

const PARAMS: ModelParams = {
  w0: 1,
  w1: 0.3,
  w2: 1,
  sigma: 2,
  phis: [1],
  phi_indexing: "lag",
};

/** Consistent server state: prediction matches the value argmax. */
function makeState(revision: number, peak = 5, fixations: Point[] = []): SessionState {
  const values = new Array(12).fill(0).map((_, i) => (i === peak ? 9 : i % 3));
  const map = { width: 4, height: 3, values, min: 0, max: 9 };
  return {
    revision,
    fixations,
    params: PARAMS,
    maps: { s: map, c: map, e: map, v: map },
    prediction: { x: peak % 4, y: Math.floor(peak / 4) },
  };
}

function deferred<T>() {
  let resolve!: (v: T) => void;
  let reject!: (e: unknown) => void;
  const promise = new Promise<T>((res, rej) => {
    resolve = res;
    reject = rej;
  });
  return { promise, resolve, reject };
}

class FakeApi implements SessionApi {
  calls: string[] = [];
  nextRevision = 1;
  getResult: SessionState = makeState(0);
  appendImpl: (x: number, y: number, rev?: number) => Promise<SessionState> = (
    x,
    y,
  ) => Promise.resolve(makeState(this.nextRevision++, 5, [{ x, y }]));

  createSession(_body: CreateSessionBody) {
    this.calls.push("create");
    return Promise.resolve({ id: "sess", revision: 0 });
  }

  getSession(_id: string) {
    this.calls.push("get");
    return Promise.resolve(this.getResult);
  }

  appendFixation(_id: string, x: number, y: number, expectedRevision?: number) {
    this.calls.push(`append@${expectedRevision}`);
    return this.appendImpl(x, y, expectedRevision);
  }

  undoFixation(_id: string) {
    this.calls.push("undo");
    return Promise.resolve(makeState(this.nextRevision++));
  }

  patchParams(_id: string, _patch: Partial<ModelParams>) {
    this.calls.push("patch");
    return Promise.resolve(makeState(this.nextRevision++));
  }
}

const BODY: CreateSessionBody = {
  saliency: { width: 4, height: 3, values: new Array(12).fill(0.5) },
  params: PARAMS,
};

describe("SessionStore", () => {
  it("connects and notifies subscribers with the initial state", async () => {
    const api = new FakeApi();
    const store = new SessionStore(api);
    const seen: number[] = [];
    store.subscribe((s) => seen.push(s.revision));
    await store.connect(BODY);
    expect(store.id).toBe("sess");
    expect(seen).toEqual([0]);
    expect(api.calls).toEqual(["create", "get"]);
  });

  it("runs mutations one at a time in FIFO order", async () => {
    const api = new FakeApi();
    const store = new SessionStore(api);
    await store.connect(BODY);

    const gate = deferred<SessionState>();
    let started = 0;
    api.appendImpl = (x) => {
      started += 1;
      return started === 1 ? gate.promise : Promise.resolve(makeState(2, 5, [{ x, y: 0 }]));
    };
    const first = store.addFixation({ x: 1, y: 0 });
    const second = store.addFixation({ x: 2, y: 0 });
    await Promise.resolve(); // let the queue pump
    expect(started).toBe(1); // second waits for the first
    gate.resolve(makeState(1, 5, [{ x: 1, y: 0 }]));
    await first;
    const after = await second;
    expect(started).toBe(2);
    expect(after.revision).toBe(2);
  });

  it("bases compare-and-set on the revision current at send time", async () => {
    const api = new FakeApi();
    const store = new SessionStore(api);
    await store.connect(BODY);
    await store.addFixation({ x: 1, y: 1 });
    await store.addFixation({ x: 2, y: 1 });
    expect(api.calls).toEqual(["create", "get", "append@0", "append@1"]);
  });

  it("never replaces current state with a stale revision", async () => {
    const api = new FakeApi();
    const store = new SessionStore(api);
    const seen: number[] = [];
    store.subscribe((s) => seen.push(s.revision));
    await store.connect(BODY);
    await store.addFixation({ x: 1, y: 1 }); // revision 1
    api.getResult = makeState(0);
    await store.refetch(); // stale: ignored
    expect(store.current?.revision).toBe(1);
    expect(seen).toEqual([0, 1]);
  });

  it("refetches automatically after a 409 and rejects the mutation", async () => {
    const api = new FakeApi();
    const store = new SessionStore(api);
    await store.connect(BODY);
    api.appendImpl = () => Promise.reject(new ApiError(409, "stale revision"));
    api.getResult = makeState(9);
    await expect(store.addFixation({ x: 0, y: 0 })).rejects.toMatchObject({
      status: 409,
    });
    expect(store.current?.revision).toBe(9);
  });

  it("keeps the queue alive after a failed mutation", async () => {
    const api = new FakeApi();
    const store = new SessionStore(api);
    await store.connect(BODY);
    api.appendImpl = () => Promise.reject(new ApiError(400, "out of bounds"));
    await expect(store.addFixation({ x: 99, y: 0 })).rejects.toMatchObject({
      status: 400,
    });
    api.appendImpl = (x, y) => Promise.resolve(makeState(1, 5, [{ x, y }]));
    const state = await store.addFixation({ x: 1, y: 1 });
    expect(state.revision).toBe(1);
  });

  it("rejects server payloads whose prediction contradicts the value argmax", async () => {
    const api = new FakeApi();
    const broken = makeState(0);
    broken.prediction = { x: 0, y: 0 }; // argmax actually at index 5
    api.getResult = broken;
    const store = new SessionStore(api);
    await expect(store.connect(BODY)).rejects.toBeInstanceOf(ConsistencyError);
  });

  it("applies undo and param patches through the same queue", async () => {
    const api = new FakeApi();
    const store = new SessionStore(api);
    await store.connect(BODY);
    await store.addFixation({ x: 1, y: 1 });
    await store.undo();
    await store.patchParams({ w1: 0 });
    expect(api.calls).toEqual(["create", "get", "append@0", "undo", "patch"]);
    expect(store.current?.revision).toBe(3);
  });
});
