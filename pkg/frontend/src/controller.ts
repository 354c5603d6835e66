import { ApiClient } from "./client.js";
import { MarkerSet } from "./markers.js";
import { QueryPanel } from "./query-panel.js";
import { Debouncer, LatestWins } from "./scheduler.js";
import { ViewerState } from "./state.js";
import type { RenderRequest, ViewMode } from "./types.js";

export interface ViewerEvents {
  onFrame?: (blob: Blob) => void;
  onOverlay?: (blob: Blob) => void;
  onError?: (message: string) => void;
}

/** Wires state changes to API traffic.
 *
 * Render requests are debounced and sequence-numbered: superseded responses
 * are dropped, and a state fingerprint suppresses requests when nothing
 * actually changed. On errors the previous frame stays up.
 */
export class ViewerController {
  private debounce: Debouncer;
  private latest = new LatestWins();
  private lastRenderFingerprint = "";
  private mapDims: [number, number] | null = null;

  readonly panel = new QueryPanel();
  readonly markers = new MarkerSet();

  constructor(
    readonly state: ViewerState,
    readonly client: ApiClient,
    private events: ViewerEvents = {},
    debounceMs = 150,
  ) {
    this.debounce = new Debouncer(debounceMs);
  }

  /** Pixel bounds for click handling on the 2D map view. */
  setMapDims(width: number, height: number): void {
    this.mapDims = [width, height];
  }

  buildRenderRequest(): RenderRequest {
    const req: RenderRequest = {
      dataset: this.state.dataset,
      model: this.state.model,
      tf: this.state.tfJson(),
      camera: this.state.cameraJson(),
    };
    if (this.state.timeIndex !== 0) req.time = this.state.timeIndex;
    return req;
  }

  /** Debounced render after camera/TF/model/time edits; identical state
   * issues no request at all. */
  onCameraOrTfChange(): void {
    this.debounce.schedule("render", () => {
      const req = this.buildRenderRequest();
      const fingerprint = JSON.stringify(req);
      if (fingerprint === this.lastRenderFingerprint) return;
      this.lastRenderFingerprint = fingerprint;
      const ticket = this.latest.issue("render");
      this.client
        .render(req)
        .then((blob) => {
          if (this.latest.isCurrent("render", ticket)) {
            this.events.onFrame?.(blob);
          }
        })
        .catch((err) => this.events.onError?.(String(err)));
    });
  }

  /** Click on the probabilistic map: query, fill the panel with the response
   * verbatim, and pin a numbered marker. Out-of-bounds clicks are ignored. */
  async onMapClick(x: number, y: number): Promise<void> {
    if (this.mapDims) {
      const [w, h] = this.mapDims;
      if (x < 0 || y < 0 || x >= w || y >= h) return;
    }
    try {
      const entries = await this.client.query(
        this.state.dataset, this.state.strategy, x, y);
      this.panel.setEntries(entries);
      this.markers.pin(x, y, entries);
    } catch (err) {
      this.events.onError?.(String(err));
    }
  }

  /** Entropy/agreement slider or preset: refresh the overlay. */
  onThresholdChange(mode: "entropy" | "agreement", value: number): void {
    if (mode === "entropy") this.state.setTau(value);
    else this.state.setAlpha(value);
    const v = mode === "entropy" ? this.state.tau : this.state.alpha;
    const ticket = this.latest.issue("view");
    this.client
      .view(this.state.dataset, this.state.strategy, mode, v)
      .then((blob) => {
        if (this.latest.isCurrent("view", ticket)) {
          this.events.onOverlay?.(blob);
        }
      })
      .catch((err) => this.events.onError?.(String(err)));
  }

  requestView(mode: ViewMode): void {
    const value =
      mode === "entropy" ? this.state.tau :
      mode === "agreement" ? this.state.alpha : undefined;
    const ticket = this.latest.issue("view");
    this.client
      .view(this.state.dataset, this.state.strategy, mode, value)
      .then((blob) => {
        if (this.latest.isCurrent("view", ticket)) {
          this.events.onOverlay?.(blob);
        }
      })
      .catch((err) => this.events.onError?.(String(err)));
  }
}
