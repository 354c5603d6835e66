import { AGREEMENT_RANGE, ENTROPY_RANGE } from "./presets.js";
import type {
  CameraJson,
  DistributionModel,
  Strategy,
  TfPoint,
  TransferFunctionJson,
} from "./types.js";

/** Spherical orbit around a fixed center; the render camera derives from it. */
export interface OrbitParams {
  center: [number, number, number];
  distance: number;
  azimuthDeg: number;
  elevationDeg: number;
  fovDeg: number;
  width: number;
  height: number;
}

const clamp = (v: number, lo: number, hi: number) => Math.min(hi, Math.max(lo, v));

/** All user-editable viewer state. Transfer-function points are kept sorted
 * by scalar at every edit; slider values are clamped to their ranges. */
export class ViewerState {
  dataset = "";
  model: DistributionModel = "uniform";
  strategy: Strategy = "morse_mapping";
  timeIndex = 0;
  tau = 1.0;
  alpha = 0.8;
  tfPoints: TfPoint[] = [
    { s: 0.0, r: 1.0, g: 1.0, b: 0.85, a: 0.0 },
    { s: 0.5, r: 0.2, g: 0.3, b: 0.9, a: 0.5 },
    { s: 1.0, r: 0.9, g: 0.1, b: 0.1, a: 0.9 },
  ];
  orbit: OrbitParams = {
    center: [0, 0, 0],
    distance: 10,
    azimuthDeg: 45,
    elevationDeg: 30,
    fovDeg: 40,
    width: 256,
    height: 256,
  };

  setTau(value: number): void {
    this.tau = clamp(value, ENTROPY_RANGE.min, ENTROPY_RANGE.max);
  }

  setAlpha(value: number): void {
    this.alpha = clamp(value, AGREEMENT_RANGE.min, AGREEMENT_RANGE.max);
  }

  addTfPoint(p: TfPoint): void {
    this.tfPoints.push({ ...p });
    this.sortTf();
  }

  moveTfPoint(index: number, s: number, a?: number): void {
    const p = this.tfPoints[index];
    if (!p) return;
    p.s = s;
    if (a !== undefined) p.a = clamp(a, 0, 1);
    this.sortTf();
  }

  removeTfPoint(index: number): void {
    if (this.tfPoints.length <= 2) return; // a valid map needs two points
    this.tfPoints.splice(index, 1);
  }

  private sortTf(): void {
    this.tfPoints.sort((u, v) => u.s - v.s);
  }

  tfJson(): TransferFunctionJson {
    return { points: this.tfPoints.map((p) => ({ ...p })) };
  }

  cameraJson(): CameraJson {
    const { center, distance, azimuthDeg, elevationDeg, fovDeg, width, height } =
      this.orbit;
    const az = (azimuthDeg * Math.PI) / 180;
    const el = (elevationDeg * Math.PI) / 180;
    const eye: [number, number, number] = [
      center[0] + distance * Math.cos(el) * Math.cos(az),
      center[1] + distance * Math.cos(el) * Math.sin(az),
      center[2] + distance * Math.sin(el),
    ];
    return {
      eye,
      look_at: [...center] as [number, number, number],
      up: [0, 0, 1],
      fov_deg: fovDeg,
      width,
      height,
    };
  }

  /** Downloadable JSON, byte-compatible with the CLI's --tf input. */
  exportTf(): string {
    return JSON.stringify(this.tfJson(), null, 1);
  }

  exportCamera(): string {
    return JSON.stringify(this.cameraJson(), null, 1);
  }
}
