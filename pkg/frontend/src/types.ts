/** One transfer-function control point; the same JSON schema the batch CLI
 * consumes, so anything authored in the editor replays offline. */
export interface TfPoint {
  /** Scalar value at which this point applies. */
  s: number;
  r: number;
  g: number;
  b: number;
  /** Opacity in [0, 1]. */
  a: number;
}

export interface TransferFunctionJson {
  points: TfPoint[];
}

export interface CameraJson {
  eye: [number, number, number];
  look_at: [number, number, number];
  up: [number, number, number];
  fov_deg: number;
  width: number;
  height: number;
}

/** One row of a /api/query response (server order is display order). */
export interface QueryEntry {
  label: number;
  prob: number;
  color: [number, number, number];
}

export interface DatasetInfo {
  name: string;
  dims: [number, number, number];
  members: number;
  field: string;
  times: number[];
}

export type Strategy = "kmeans" | "morse_mapping" | "nearest_mandatory";
export type ViewMode = "blend" | "boundaries" | "entropy" | "agreement";
export type DistributionModel = "mean" | "uniform" | "gaussian" | "gmm4" | "quantile";

export interface RenderRequest {
  dataset: string;
  model: DistributionModel;
  tf: TransferFunctionJson;
  camera: CameraJson;
  time?: number;
  quartile?: "lower" | "middle" | "upper";
}
