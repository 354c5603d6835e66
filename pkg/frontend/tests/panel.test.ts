import { describe, expect, it } from "vitest";

import fixtures from "./fixtures/query_responses.json";
import { ApiClient, type FetchLike } from "../src/client.js";
import { ViewerController } from "../src/controller.js";
import { QueryPanel, formatProbability } from "../src/query-panel.js";
import { ViewerState } from "../src/state.js";
import type { QueryEntry } from "../src/types.js";

interface Fixture {
  click: { x: number; y: number };
  response: QueryEntry[];
}

const scripted = fixtures as Fixture[];

describe("query panel", () => {
  it("shows a single 100% bar for a one-hot pixel", () => {
    const p = new QueryPanel();
    p.setEntries([{ label: 3, prob: 1.0, color: [9, 9, 9] }]);
    expect(p.rows.length).toBe(1);
    expect(p.rows[0].text).toBe("100.0%");
    expect(p.rows[0].barWidth).toBe("100.0%");
  });

  it("preserves server order without re-sorting", () => {
    const p = new QueryPanel();
    // deliberately not sorted by probability: server order is authoritative
    const entries: QueryEntry[] = [
      { label: 2, prob: 0.3, color: [1, 1, 1] },
      { label: 0, prob: 0.5, color: [2, 2, 2] },
      { label: 1, prob: 0.2, color: [3, 3, 3] },
    ];
    p.setEntries(entries);
    expect(p.rows.map((r) => r.label)).toEqual([2, 0, 1]);
    expect(p.rows.map((r) => r.prob)).toEqual([0.3, 0.5, 0.2]);
  });

  it("formats without altering the underlying numbers", () => {
    const p = new QueryPanel();
    p.setEntries([{ label: 0, prob: 0.30000000000000004, color: [0, 0, 0] }]);
    expect(p.rows[0].prob).toBe(0.30000000000000004);
    expect(formatProbability(0.375)).toBe("37.5%");
  });
});

describe("viewer/server equivalence on recorded responses", () => {
  it("displays 20 scripted click responses verbatim", async () => {
    expect(scripted.length).toBe(20);
    const byPixel = new Map(
      scripted.map((f) => [`${f.click.x},${f.click.y}`, f.response]));
    const fetchFn: FetchLike = (url) => {
      const q = new URLSearchParams(url.split("?")[1]);
      const key = `${q.get("x")},${q.get("y")}`;
      const body = byPixel.get(key);
      if (!body) return Promise.resolve(new Response("{}", { status: 404 }));
      return Promise.resolve(new Response(JSON.stringify(body), {
        status: 200, headers: { "content-type": "application/json" } }));
    };
    const state = new ViewerState();
    state.dataset = "slice2d";
    state.strategy = "kmeans";
    const controller = new ViewerController(state, new ApiClient("", fetchFn));
    controller.setMapDims(48, 32);

    for (const f of scripted) {
      await controller.onMapClick(f.click.x, f.click.y);
      // the panel must equal the response verbatim: same order, labels,
      // probabilities, and colors
      expect(controller.panel.rows.map((r) => ({
        label: r.label, prob: r.prob, color: r.color,
      }))).toEqual(f.response);
      const probs = f.response.map((e) => e.prob);
      expect([...probs].sort((a, b) => b - a)).toEqual(probs);
    }
    expect(controller.markers.markers.map((m) => m.id))
      .toEqual([...Array(20).keys()]);
  });
});
