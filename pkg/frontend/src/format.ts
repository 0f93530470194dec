/** Display formatting. The UI never computes anything numeric beyond
 * these percent roundings; all values shown come verbatim from the API. */

/** Fraction -> integer percent, rounded half up (0.665 -> 67). */
export function percent(fraction: number): number {
  return Math.floor(fraction * 100 + 0.5);
}

export function formatPercent(fraction: number): string {
  return `${percent(fraction)}%`;
}

/** Full-precision text for tooltips. */
export function fullPrecision(x: number): string {
  return String(x);
}

export function formatValue(x: number | null): string {
  return x === null ? "–" : x.toFixed(4);
}

export function formatLambda(lambda: number): string {
  return lambda.toFixed(3).replace(/\.?0+$/, "") || "0";
}
