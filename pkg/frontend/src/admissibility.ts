/**
 * Client-side admissibility preview from the service's block partition.
 *
 * This is pure set logic over the blocks the service returned for the
 * current rho, used to warn before submitting; the service remains the
 * authority and re-checks on every query.
 */

import type { Block } from "./types.js";

/** The first block split by the selection (members inside and outside), or null. */
export function splittingBlock(selected: ReadonlySet<number>, blocks: Block[]): Block | null {
  for (const block of blocks) {
    let inside = 0;
    for (const j of block.indices) {
      if (selected.has(j)) inside += 1;
    }
    if (inside > 0 && inside < block.indices.length) return block;
  }
  return null;
}

export function isAdmissible(selected: ReadonlySet<number>, blocks: Block[]): boolean {
  return splittingBlock(selected, blocks) === null;
}
