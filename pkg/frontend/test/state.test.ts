import { describe, expect, it } from "vitest";

import { ExplorerState } from "../src/state.js";
import type { TestResponse } from "../src/types.js";

function fakeResponse(names: string[], po: number): TestResponse {
  return {
    tested: names.map((_, i) => i),
    tested_names: names,
    po,
    log_po: Math.log(po),
    p_unadj: 0.01,
    p_adj: 0.05,
    p_adj_raw: 0.05,
    fdr_bound: null,
    rejected_bayes: po >= 9,
    rejected_fwer: false,
    tau: 9,
    alpha: 0.025,
    declared_nu: names.length,
    mode: "full",
    excluded_names: [],
    admissible: true,
    grouping: { rho: 0.8, blocks: [] },
  };
}

function freshState(): ExplorerState {
  const state = new ExplorerState();
  state.setSession("s1", ["a", "b", "c"]);
  state.setBlocks([
    { indices: [0, 1], names: ["a", "b"] },
    { indices: [2], names: ["c"] },
  ]);
  return state;
}

describe("selection", () => {
  it("query stays disabled until something is selected", () => {
    const state = freshState();
    expect(state.queryEnabled).toBe(false);
    state.toggle(0);
    expect(state.queryEnabled).toBe(true);
    state.toggle(0);
    expect(state.queryEnabled).toBe(false);
  });

  it("tracks admissibility against the current blocks", () => {
    const state = freshState();
    state.toggle(0);
    expect(state.admissible).toBe(false);
    expect(state.violatedBlock?.names).toEqual(["a", "b"]);
    state.toggle(1);
    expect(state.admissible).toBe(true);
  });

  it("select all covers every block", () => {
    const state = freshState();
    state.selectAll();
    expect(state.selectedNames).toEqual(["a", "b", "c"]);
    expect(state.admissible).toBe(true);
  });
});

describe("in-flight queries", () => {
  it("discards stale responses by request token", () => {
    const state = freshState();
    const first = state.beginQuery();
    const second = state.beginQuery();
    // the older response lands after the newer request started
    expect(state.acceptResult(first, ["a"], 0.8, fakeResponse(["a"], 2))).toBe(false);
    expect(state.history.length).toBe(0);
    expect(state.acceptResult(second, ["a", "b"], 0.8, fakeResponse(["a", "b"], 3))).toBe(true);
    expect(state.history.length).toBe(1);
    expect(state.latest?.group).toEqual(["a", "b"]);
  });

  it("a failed query leaves history intact", () => {
    const state = freshState();
    const ok = state.beginQuery();
    state.acceptResult(ok, ["c"], 0.8, fakeResponse(["c"], 5));
    const bad = state.beginQuery();
    state.failQuery(bad);
    expect(state.history.length).toBe(1);
    expect(state.latest?.group).toEqual(["c"]);
  });
});

describe("history", () => {
  it("is append-only with rising sequence numbers", () => {
    const state = freshState();
    for (const [names, po] of [[["a"], 1.5], [["b"], 7.2], [["a", "b"], 22]] as const) {
      const token = state.beginQuery();
      state.acceptResult(token, names, 0.8, fakeResponse([...names], po));
    }
    expect(state.history.map((h) => h.seq)).toEqual([1, 2, 3]);
    expect(state.history.map((h) => h.response.po)).toEqual([1.5, 7.2, 22]);
  });

  it("survives a session switch", () => {
    const state = freshState();
    const token = state.beginQuery();
    state.acceptResult(token, ["a"], 0.8, fakeResponse(["a"], 4));
    state.setSession("s2", ["x", "y"]);
    expect(state.history.length).toBe(1);
    expect(state.selectedNames).toEqual([]);
  });
});
