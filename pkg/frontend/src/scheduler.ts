/** Trailing-edge debouncer keyed by endpoint class. */
export class Debouncer {
  private handles = new Map<string, ReturnType<typeof setTimeout>>();

  constructor(private delayMs = 150) {}

  schedule(key: string, op: () => void): void {
    const prev = this.handles.get(key);
    if (prev !== undefined) clearTimeout(prev);
    this.handles.set(
      key,
      setTimeout(() => {
        this.handles.delete(key);
        op();
      }, this.delayMs),
    );
  }
}

/** At most one applied response per endpoint class: each issue() gets a
 * sequence number, and a response is delivered only if no newer request has
 * been issued since (stale frames are dropped, never displayed). */
export class LatestWins {
  private seq = new Map<string, number>();

  issue(key: string): number {
    const n = (this.seq.get(key) ?? 0) + 1;
    this.seq.set(key, n);
    return n;
  }

  isCurrent(key: string, ticket: number): boolean {
    return this.seq.get(key) === ticket;
  }
}
