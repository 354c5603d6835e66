import type { DatasetInfo, QueryEntry, RenderRequest, Strategy, ViewMode } from "./types.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export interface RequestLogEntry {
  method: string;
  url: string;
  body?: string;
}

/** Thin wrapper over the HTTP API. Every call is appended to `log`, so a
 * scripted interaction can be replayed and compared request-for-request. */
export class ApiClient {
  readonly log: RequestLogEntry[] = [];

  constructor(
    private baseUrl = "",
    private fetchFn: FetchLike = (u, i) => fetch(u, i),
  ) {}

  private async getJson<T>(url: string): Promise<T> {
    this.log.push({ method: "GET", url });
    const r = await this.fetchFn(this.baseUrl + url);
    if (!r.ok) throw new Error(`GET ${url}: ${r.status}`);
    return (await r.json()) as T;
  }

  private async getBlob(url: string): Promise<Blob> {
    this.log.push({ method: "GET", url });
    const r = await this.fetchFn(this.baseUrl + url);
    if (!r.ok) throw new Error(`GET ${url}: ${r.status}`);
    return await r.blob();
  }

  datasets(): Promise<DatasetInfo[]> {
    return this.getJson("/api/datasets");
  }

  async render(req: RenderRequest): Promise<Blob> {
    const body = JSON.stringify(req);
    this.log.push({ method: "POST", url: "/api/render", body });
    const r = await this.fetchFn(this.baseUrl + "/api/render", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body,
    });
    if (!r.ok) throw new Error(`POST /api/render: ${r.status}`);
    return await r.blob();
  }

  viewUrl(dataset: string, strategy: Strategy, mode: ViewMode, value?: number): string {
    const q = new URLSearchParams({ dataset, strategy, mode });
    if (mode === "entropy" && value !== undefined) q.set("tau", String(value));
    if (mode === "agreement" && value !== undefined) q.set("alpha", String(value));
    return `/api/view?${q.toString()}`;
  }

  view(dataset: string, strategy: Strategy, mode: ViewMode, value?: number): Promise<Blob> {
    return this.getBlob(this.viewUrl(dataset, strategy, mode, value));
  }

  query(dataset: string, strategy: Strategy, x: number, y: number): Promise<QueryEntry[]> {
    const q = new URLSearchParams({ dataset, strategy, x: String(x), y: String(y) });
    return this.getJson(`/api/query?${q.toString()}`);
  }
}
