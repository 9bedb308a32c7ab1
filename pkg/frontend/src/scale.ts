/**
 * Diverging color scale for the choropleth.
 *
 * Anchored at 1.0: rent exactly covering the mortgage is the neutral
 * midpoint. The domain is clamped to [0.3, 3.0]; observed city-wide
 * cells span roughly 0.34 to 2.93, so anything outside saturates at the
 * end colors. Missing cells render gray.
 */

export const SCALE_MIN = 0.3;
export const SCALE_CENTER = 1.0;
export const SCALE_MAX = 3.0;

export const MISSING_COLOR = '#c4c4c4';

const LOW = [178, 24, 43] as const; // deep red, index far below 1
const MID = [245, 245, 245] as const; // neutral at exactly 1
const HIGH = [33, 102, 172] as const; // deep blue, index far above 1

const mix = (a: readonly number[], b: readonly number[], t: number): string => {
  const channel = (i: number) => Math.round(a[i] + (b[i] - a[i]) * t);
  return `rgb(${channel(0)}, ${channel(1)}, ${channel(2)})`;
};

export const clampIndex = (value: number): number =>
  Math.min(Math.max(value, SCALE_MIN), SCALE_MAX);

export const colorForIndex = (value: number | null | undefined): string => {
  if (value === null || value === undefined || !Number.isFinite(value)) {
    return MISSING_COLOR;
  }
  const v = clampIndex(value);
  if (v < SCALE_CENTER) {
    return mix(LOW, MID, (v - SCALE_MIN) / (SCALE_CENTER - SCALE_MIN));
  }
  return mix(MID, HIGH, (v - SCALE_CENTER) / (SCALE_MAX - SCALE_CENTER));
};

/** Stops for the legend gradient, low end first. */
export const legendStops = (n = 7): { value: number; color: string }[] => {
  const stops: { value: number; color: string }[] = [];
  for (let i = 0; i < n; i++) {
    // pin the endpoints; the sum drifts by one ulp otherwise
    const value =
      i === n - 1 ? SCALE_MAX : SCALE_MIN + ((SCALE_MAX - SCALE_MIN) * i) / (n - 1);
    stops.push({ value, color: colorForIndex(value) });
  }
  return stops;
};
