import type { QueryEntry } from "./types.js";

export interface Marker {
  /** Sequential number shown on the map (0, 1, 2, ...). */
  id: number;
  x: number;
  y: number;
  /** Last query response pinned with this marker. */
  response: QueryEntry[];
}

/** Numbered pins left behind by map clicks. */
export class MarkerSet {
  markers: Marker[] = [];

  pin(x: number, y: number, response: QueryEntry[]): Marker {
    const m: Marker = { id: this.markers.length, x, y, response };
    this.markers.push(m);
    return m;
  }

  clear(): void {
    this.markers = [];
  }
}
