/**
 * Contract test over the exhaustive 4-variable fixture: everything the
 * client would display must equal the recorded service payloads up to the
 * documented 4-significant-figure rounding, and the client-side
 * admissibility preview must agree with the service verdict on every one
 * of the 15 possible selections.
 */

import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";
import { describe, expect, it } from "vitest";

import { isAdmissible, splittingBlock } from "../src/admissibility.js";
import { renderResult } from "../src/display.js";
import { roundSig } from "../src/format.js";
import { ExplorerState } from "../src/state.js";
import type { BlocksPayload, SessionSummary, TestResponse } from "../src/types.js";

interface FixtureTest {
  mask: number;
  tested: string[];
  response: TestResponse;
}

interface Fixture {
  session: SessionSummary;
  rho: number;
  groups: BlocksPayload;
  rho_sweep: Record<string, BlocksPayload>;
  tests: FixtureTest[];
  estimates: { estimates: Array<{ name: string; bayes_mean: number }> };
}

const here = dirname(fileURLToPath(import.meta.url));
const fixture: Fixture = JSON.parse(
  readFileSync(join(here, "..", "fixtures", "nu4_fixture.json"), "utf-8"),
);

function selectionOf(mask: number): Set<number> {
  const out = new Set<number>();
  for (let j = 0; j < fixture.session.nu; j += 1) {
    if (mask & (1 << j)) out.add(j);
  }
  return out;
}

describe("exhaustive fixture contract", () => {
  it("covers every nonempty subset of the four variables", () => {
    const masks = fixture.tests.map((t) => t.mask).sort((a, b) => a - b);
    expect(masks).toEqual(Array.from({ length: 15 }, (_, i) => i + 1));
  });

  it("displays service numbers verbatim at 4 significant figures", () => {
    for (const t of fixture.tests) {
      const view = renderResult(t.response);
      expect(Number(view.po)).toBe(roundSig(t.response.po));
      expect(Number(view.pUnadjusted)).toBe(roundSig(t.response.p_unadj));
      expect(Number(view.pAdjusted)).toBe(roundSig(t.response.p_adj));
      expect(Number(view.pAdjustedRaw)).toBe(roundSig(t.response.p_adj_raw));
    }
  });

  it("admissibility preview equals the service verdict on all 15 selections", () => {
    for (const t of fixture.tests) {
      const selected = selectionOf(t.mask);
      expect(isAdmissible(selected, fixture.groups.blocks)).toBe(
        t.response.admissible,
      );
    }
  });

  it("warning fires exactly on inadmissible selections and names a block", () => {
    const state = new ExplorerState();
    state.setSession(fixture.session.id, fixture.session.names);
    state.setBlocks(fixture.groups.blocks);
    for (const t of fixture.tests) {
      state.clearSelection();
      for (const j of selectionOf(t.mask)) state.toggle(j);
      expect(state.admissible).toBe(t.response.admissible);
      const block = state.violatedBlock;
      if (t.response.admissible) {
        expect(block).toBeNull();
      } else {
        expect(block).not.toBeNull();
        // the flagged block really is split by the selection
        const inside = block!.indices.filter((j) => selectionOf(t.mask).has(j));
        expect(inside.length).toBeGreaterThan(0);
        expect(inside.length).toBeLessThan(block!.indices.length);
      }
    }
  });

  it("rejection flags pass through untouched", () => {
    for (const t of fixture.tests) {
      const view = renderResult(t.response);
      expect(view.bayesVerdict.startsWith("rejected")).toBe(
        t.response.rejected_bayes,
      );
      expect(view.fwerVerdict.startsWith("rejected")).toBe(
        t.response.rejected_fwer,
      );
    }
  });

  it("blocks refine monotonically as rho rises", () => {
    const keys = Object.keys(fixture.rho_sweep).sort(
      (a, b) => Number(a) - Number(b),
    );
    for (let i = 1; i < keys.length; i += 1) {
      const coarse = fixture.rho_sweep[keys[i - 1]].blocks;
      const fine = fixture.rho_sweep[keys[i]].blocks;
      // every fine block sits inside one coarse block
      for (const fb of fine) {
        const hosts = coarse.filter((cb) =>
          fb.indices.every((j) => cb.indices.includes(j)),
        );
        expect(hosts.length).toBe(1);
      }
    }
  });

  it("the grand selection reproduces the recorded grand-null report", () => {
    const grand = fixture.tests.find((t) => t.mask === 15)!;
    expect(grand.response.admissible).toBe(true);
    const view = renderResult(grand.response);
    expect(view.group.split(" + ").length).toBe(4);
  });
});
