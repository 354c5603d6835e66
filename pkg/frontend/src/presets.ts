/** Threshold presets surfaced as buttons next to the sliders. */
export const ENTROPY_PRESETS: readonly number[] = [1.5, 1.25, 1.0, 0.8];
export const AGREEMENT_PRESETS: readonly number[] = [0.8, 0.7, 0.6];

export const ENTROPY_RANGE = { min: 0, max: 4, step: 0.05 } as const;
export const AGREEMENT_RANGE = { min: 0.05, max: 1, step: 0.05 } as const;
