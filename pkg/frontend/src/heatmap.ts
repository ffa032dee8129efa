/** Vulnerability heatmap scale: V in [0,1] -> color, monotone in V. */

export interface Rgb {
  r: number;
  g: number;
  b: number;
}

const LOW: Rgb = { r: 34, g: 120, b: 58 };   // covered: green
const HIGH: Rgb = { r: 185, g: 28, b: 28 };  // exposed: red

function clamp01(v: number): number {
  return v < 0 ? 0 : v > 1 ? 1 : v;
}

/** Linear interpolation between the scale endpoints; monotone in V. */
export function vulnerabilityColor(v: number): Rgb {
  const f = clamp01(v);
  return {
    r: Math.round(LOW.r + (HIGH.r - LOW.r) * f),
    g: Math.round(LOW.g + (HIGH.g - LOW.g) * f),
    b: Math.round(LOW.b + (HIGH.b - LOW.b) * f),
  };
}

export function cssColor(v: number, alpha = 0.55): string {
  const { r, g, b } = vulnerabilityColor(v);
  return `rgba(${r},${g},${b},${alpha})`;
}

/** Scalar severity of a color for monotonicity checks: redness - greenness. */
export function colorSeverity(c: Rgb): number {
  return c.r - c.g;
}

/** Displayed V values are the API values to 3 decimals, exactly. */
export function formatV(v: number): string {
  return v.toFixed(3);
}
