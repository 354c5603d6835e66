import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";

import { Debouncer, LatestWins } from "../src/scheduler.js";

describe("Debouncer", () => {
  beforeEach(() => vi.useFakeTimers());
  afterEach(() => vi.useRealTimers());

  it("coalesces rapid schedules to the last op", () => {
    const d = new Debouncer(100);
    const calls: number[] = [];
    d.schedule("k", () => calls.push(1));
    d.schedule("k", () => calls.push(2));
    d.schedule("k", () => calls.push(3));
    vi.advanceTimersByTime(250);
    expect(calls).toEqual([3]);
  });

  it("keys are independent", () => {
    const d = new Debouncer(50);
    const calls: string[] = [];
    d.schedule("a", () => calls.push("a"));
    d.schedule("b", () => calls.push("b"));
    vi.advanceTimersByTime(100);
    expect(calls.sort()).toEqual(["a", "b"]);
  });
});

describe("LatestWins", () => {
  it("only the newest ticket is current", () => {
    const lw = new LatestWins();
    const t1 = lw.issue("render");
    const t2 = lw.issue("render");
    expect(lw.isCurrent("render", t1)).toBe(false);
    expect(lw.isCurrent("render", t2)).toBe(true);
  });

  it("classes are independent", () => {
    const lw = new LatestWins();
    const r = lw.issue("render");
    lw.issue("view");
    expect(lw.isCurrent("render", r)).toBe(true);
  });
});
