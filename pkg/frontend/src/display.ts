/**
 * Pure mapping from service payloads to the strings shown on screen.
 * Kept DOM-free so the contract tests can exercise exactly what renders.
 */

import { formatProb, formatSig } from "./format.js";
import type { TestResponse } from "./types.js";

export interface ResultView {
  group: string;
  po: string;
  pUnadjusted: string;
  pAdjusted: string;
  pAdjustedRaw: string;
  fdrBound: string;
  bayesVerdict: string;
  fwerVerdict: string;
  admissible: boolean;
  modeNote: string;
}

export function renderResult(resp: TestResponse): ResultView {
  const modeNote =
    resp.mode === "sub-analysis"
      ? `sub-analysis: rejection applies to the intersection with ${
          resp.excluded_names.length
            ? resp.excluded_names.join(", ")
            : "all excluded variables"
        } (adjusted over ${resp.declared_nu})`
      : "";
  return {
    group: resp.tested_names.join(" + "),
    po: formatSig(resp.po),
    pUnadjusted: formatProb(resp.p_unadj),
    pAdjusted: formatProb(resp.p_adj),
    pAdjustedRaw: formatProb(resp.p_adj_raw),
    fdrBound: resp.fdr_bound === null ? "–" : formatProb(resp.fdr_bound),
    bayesVerdict: resp.rejected_bayes
      ? `rejected (odds ≥ ${formatSig(resp.tau)})`
      : `not rejected (odds < ${formatSig(resp.tau)})`,
    fwerVerdict: resp.rejected_fwer
      ? `rejected (adj. p ≤ ${formatSig(resp.alpha)})`
      : `not rejected (adj. p > ${formatSig(resp.alpha)})`,
    admissible: resp.admissible,
    modeNote,
  };
}
