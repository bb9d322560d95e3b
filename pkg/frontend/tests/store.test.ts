import { describe, expect, it } from "vitest";

import { ApiClient, type FetchLike } from "../src/api.js";
import { SessionStore } from "../src/store.js";
import {
  createStubServer,
  ENVELOPE,
  PATCHED,
  REGENERATED,
  SESSION,
  TABLE,
  type StubServer,
} from "./stubServer.js";

const CSV = new Blob(["Title,IMDB Rating\nAlien,8.5\n"], { type: "text/csv" });

async function loadedStore(): Promise<{ stub: StubServer; store: SessionStore }> {
  const stub = createStubServer();
  const store = new SessionStore(new ApiClient("http://stub", stub.fetch));
  await store.loadTable(CSV, "movies_mini.csv");
  return { stub, store };
}

async function generatedStore(): Promise<{ stub: StubServer; store: SessionStore }> {
  const context = await loadedStore();
  await context.store.submitUtterance(ENVELOPE.utterance);
  return context;
}

describe("table loading", () => {
  it("stores the table and opens a session", async () => {
    const { store } = await loadedStore();
    const state = store.getState();
    expect(state.table).toEqual(TABLE);
    expect(state.sessionId).toBe(SESSION.session_id);
    expect(state.results).toEqual([]);
    expect(state.banner).toBeNull();
    expect(state.pending).toBe(false);
  });

  it("keeps the table empty and raises a banner when the upload fails", async () => {
    const stub = createStubServer();
    const store = new SessionStore(new ApiClient("http://stub", stub.fetch));
    await store.loadTable(new Blob(["   "]), "blank.csv");
    const state = store.getState();
    expect(state.table).toBeNull();
    expect(state.sessionId).toBeNull();
    expect(state.banner).toBe("no rows");
  });

  it("resets previous results when a new table arrives", async () => {
    const { store } = await generatedStore();
    await store.loadTable(CSV, "again.csv");
    const state = store.getState();
    expect(state.results).toEqual([]);
    expect(state.selectedRank).toBeNull();
    expect(state.table).toEqual(TABLE);
  });
});

describe("generation", () => {
  it("fills the results and selects the top rank", async () => {
    const { store } = await generatedStore();
    const state = store.getState();
    expect(state.results).toEqual(ENVELOPE.results);
    expect(state.selectedRank).toBe(1);
    expect(state.utterance).toBe(ENVELOPE.utterance);
    expect(store.selectedResult?.rank).toBe(1);
  });

  it("ignores blank utterances", async () => {
    const { stub, store } = await loadedStore();
    const before = stub.requests.length;
    await store.submitUtterance("   ");
    expect(stub.requests.length).toBe(before);
    expect(store.getState().results).toEqual([]);
  });

  it("explains a dead search and keeps the old results", async () => {
    const { store } = await generatedStore();
    await store.submitUtterance("unanswerable");
    const state = store.getState();
    expect(state.banner).toContain("step 5");
    expect(state.banner).toContain("Try rephrasing");
    expect(state.results).toEqual(ENVELOPE.results);
    expect(state.utterance).toBe("unanswerable");
    expect(state.pending).toBe(false);
  });

  it("surfaces backend failures as a banner", async () => {
    const { store } = await generatedStore();
    await store.submitUtterance("boom");
    const state = store.getState();
    expect(state.banner).toBe("backend down");
    expect(state.results).toEqual(ENVELOPE.results);
    expect(state.utterance).toBe("boom");
  });

  it("allows only one request in flight", async () => {
    const stub = createStubServer();
    let release!: () => void;
    const gate = new Promise<void>((resolve) => {
      release = resolve;
    });
    let gated = false;
    const fetchImpl: FetchLike = async (input, init) => {
      if (gated) await gate;
      return stub.fetch(input, init);
    };
    const store = new SessionStore(new ApiClient("http://stub", fetchImpl));
    await store.loadTable(CSV, "movies_mini.csv");

    gated = true;
    const first = store.submitUtterance("first question");
    expect(store.getState().pending).toBe(true);
    await store.submitUtterance("second question");
    expect(store.getState().utterance).toBe("first question");

    release();
    await first;
    const generates = stub.requests.filter((r) => r.path.endsWith("/generate"));
    expect(generates).toHaveLength(1);
    expect(store.getState().results).toHaveLength(3);
    expect(store.getState().pending).toBe(false);
  });
});

describe("regeneration", () => {
  it("replaces the results with the server's new documents", async () => {
    const { store } = await generatedStore();
    await store.regenerateFrom(1, 2, {
      "1": "Major Genre, Worldwide Gross, Release Year",
      "2": "Release Year >= 2008",
    });
    const state = store.getState();
    expect(state.results).toEqual(REGENERATED.results);
    expect(state.selectedRank).toBe(1);
    expect(state.fieldErrors).toEqual({});
  });

  it("lands a rejected edit on the step field and keeps the results", async () => {
    const { store } = await generatedStore();
    const before = store.getState().results;
    await store.regenerateFrom(1, 2, { "2": "Budget >= 10" });
    const state = store.getState();
    expect(state.fieldErrors).toEqual({ "step-2": "unknown column 'Budget'" });
    expect(state.results).toBe(before);
    expect(state.banner).toBeNull();
  });

  it("falls back to the top rank when the selected rank disappears", async () => {
    const stub = createStubServer();
    const narrowed = { ...ENVELOPE, results: ENVELOPE.results.slice(0, 1) };
    const fetchImpl: FetchLike = async (input, init) => {
      if (input.endsWith("/regenerate") && init?.method === "POST") {
        return new Response(JSON.stringify(narrowed), { status: 200 });
      }
      return stub.fetch(input, init);
    };
    const store = new SessionStore(new ApiClient("http://stub", fetchImpl));
    await store.loadTable(CSV, "movies_mini.csv");
    await store.submitUtterance(ENVELOPE.utterance);
    store.selectResult(3);
    expect(store.getState().selectedRank).toBe(3);

    await store.regenerateFrom(3, 6, { "6": "y desc" });
    expect(store.getState().results).toHaveLength(1);
    expect(store.getState().selectedRank).toBe(1);
  });
});

describe("config patches", () => {
  it("replaces only the patched result", async () => {
    const { store } = await generatedStore();
    const untouched = store.getState().results.slice(1);
    await store.applyConfigPatch(1, {
      mark: "point",
      aggregations: { y: "none" },
    });
    const state = store.getState();
    expect(state.results).toHaveLength(3);
    expect(state.results[0]).toEqual(PATCHED);
    expect(state.results.slice(1)).toEqual(untouched);
    expect(state.selectedRank).toBe(1);
  });

  it("shows a rejected patch inline and changes nothing", async () => {
    const { store } = await generatedStore();
    const before = store.getState().results;
    await store.applyConfigPatch(1, { color: "Budget" });
    const state = store.getState();
    expect(state.fieldErrors).toEqual({ config: "unknown column: 'Budget'" });
    expect(state.results).toBe(before);
    expect(state.banner).toBeNull();
  });
});

describe("selection and modes", () => {
  it("ignores unknown ranks", async () => {
    const { store } = await generatedStore();
    store.selectResult(99);
    expect(store.getState().selectedRank).toBe(1);
  });

  it("clears field errors on selection and mode changes", async () => {
    const { store } = await generatedStore();
    await store.regenerateFrom(1, 2, { "2": "Budget >= 10" });
    expect(store.getState().fieldErrors).not.toEqual({});
    store.selectResult(2);
    expect(store.getState().fieldErrors).toEqual({});

    await store.applyConfigPatch(1, { color: "Budget" });
    expect(store.getState().fieldErrors).not.toEqual({});
    store.setEditMode("config");
    expect(store.getState().fieldErrors).toEqual({});
    expect(store.getState().editMode).toBe("config");
  });
});
