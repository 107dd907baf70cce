/**
 * Explorer state: the selected candidate group, the grouping threshold and
 * test controls, and an append-only history of every answered query.
 *
 * At most one query is considered live at a time; results arriving for an
 * older token are discarded so a slow response can never overwrite a newer
 * one.
 */

import type { Block, TestResponse } from "./types.js";
import { isAdmissible, splittingBlock } from "./admissibility.js";

export interface HistoryEntry {
  readonly seq: number;
  readonly group: readonly string[];
  readonly rho: number;
  readonly response: TestResponse;
}

export class ExplorerState {
  sessionId: string | null = null;
  names: readonly string[] = [];
  blocks: Block[] = [];
  rho = 0.8;
  tau = 9;
  alpha = 0.025;

  private selectedIdx = new Set<number>();
  private historyEntries: HistoryEntry[] = [];
  private nextToken = 0;
  private liveToken: number | null = null;
  private seq = 0;

  setSession(id: string, names: readonly string[]): void {
    this.sessionId = id;
    this.names = [...names];
    this.selectedIdx = new Set();
    this.blocks = [];
    // history intentionally survives session switches within a browser session
  }

  get selected(): ReadonlySet<number> {
    return this.selectedIdx;
  }

  get selectedNames(): string[] {
    return [...this.selectedIdx].sort((a, b) => a - b).map((j) => this.names[j]);
  }

  toggle(index: number): void {
    if (index < 0 || index >= this.names.length) return;
    if (this.selectedIdx.has(index)) this.selectedIdx.delete(index);
    else this.selectedIdx.add(index);
  }

  selectAll(): void {
    this.selectedIdx = new Set(this.names.map((_, j) => j));
  }

  clearSelection(): void {
    this.selectedIdx = new Set();
  }

  /** A query can be submitted only for a nonempty selection. */
  get queryEnabled(): boolean {
    return this.selectedIdx.size > 0;
  }

  /** Live admissibility preview against the blocks at the current rho. */
  get admissible(): boolean {
    return isAdmissible(this.selectedIdx, this.blocks);
  }

  get violatedBlock(): Block | null {
    return splittingBlock(this.selectedIdx, this.blocks);
  }

  setBlocks(blocks: Block[]): void {
    this.blocks = blocks;
  }

  /** Start a query; any earlier in-flight token becomes stale. */
  beginQuery(): number {
    const token = ++this.nextToken;
    this.liveToken = token;
    return token;
  }

  /** Record a response if its token is still live. Returns false when stale. */
  acceptResult(token: number, group: readonly string[], rho: number, response: TestResponse): boolean {
    if (token !== this.liveToken) return false;
    this.liveToken = null;
    this.historyEntries.push({
      seq: ++this.seq,
      group: [...group],
      rho,
      response,
    });
    return true;
  }

  /** A failed query releases the token; history is untouched. */
  failQuery(token: number): void {
    if (token === this.liveToken) this.liveToken = null;
  }

  get history(): readonly HistoryEntry[] {
    return this.historyEntries;
  }

  get latest(): HistoryEntry | null {
    return this.historyEntries.length
      ? this.historyEntries[this.historyEntries.length - 1]
      : null;
  }
}
