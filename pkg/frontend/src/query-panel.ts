import type { QueryEntry } from "./types.js";

export interface PanelRow {
  label: number;
  /** Probability exactly as received from the server. */
  prob: number;
  color: [number, number, number];
  /** Display-only formatting of prob; no other arithmetic happens here. */
  text: string;
  /** CSS percentage width for the probability bar. */
  barWidth: string;
}

/** Holds the last query response verbatim: same entries, same order. */
export class QueryPanel {
  rows: PanelRow[] = [];

  setEntries(entries: QueryEntry[]): void {
    this.rows = entries.map((e) => ({
      label: e.label,
      prob: e.prob,
      color: e.color,
      text: formatProbability(e.prob),
      barWidth: `${(e.prob * 100).toFixed(1)}%`,
    }));
  }

  clear(): void {
    this.rows = [];
  }
}

export function formatProbability(p: number): string {
  return `${(p * 100).toFixed(1)}%`;
}
