/** Pure score-to-color mappings for the results table.
 *
 * Bridginess runs light green (non-bridging) to dark green (bridging);
 * alignment runs blue (negative, left-engaging) through neutral at zero
 * to red (positive, right-engaging).
 */

type Rgb = [number, number, number];

const GREEN_LIGHT: Rgb = [232, 245, 233];
const GREEN_DARK: Rgb = [27, 94, 32];
const BLUE: Rgb = [21, 101, 192];
const NEUTRAL: Rgb = [245, 245, 245];
const RED: Rgb = [198, 40, 40];

const BRIDGINESS_MAX = 1;
const ALIGNMENT_MAX = 2;

function clamp(value: number, lo: number, hi: number): number {
  return Math.min(Math.max(value, lo), hi);
}

function mix(a: Rgb, b: Rgb, t: number): Rgb {
  return [
    Math.round(a[0] + (b[0] - a[0]) * t),
    Math.round(a[1] + (b[1] - a[1]) * t),
    Math.round(a[2] + (b[2] - a[2]) * t),
  ];
}

function hex(rgb: Rgb): string {
  return "#" + rgb.map((c) => c.toString(16).padStart(2, "0")).join("");
}

/** Light-to-dark green over bridginess in [0, 1]. */
export function bridginessColor(score: number): string {
  const t = clamp(score, 0, BRIDGINESS_MAX);
  return hex(mix(GREEN_LIGHT, GREEN_DARK, t));
}

/** Blue at -2 through neutral at 0 to red at +2. */
export function alignmentColor(score: number): string {
  const t = clamp(score, -ALIGNMENT_MAX, ALIGNMENT_MAX) / ALIGNMENT_MAX;
  return t < 0 ? hex(mix(NEUTRAL, BLUE, -t)) : hex(mix(NEUTRAL, RED, t));
}

/** Dark text over light cells, light text over dark cells. */
export function textColorFor(background: string): string {
  const r = parseInt(background.slice(1, 3), 16);
  const g = parseInt(background.slice(3, 5), 16);
  const b = parseInt(background.slice(5, 7), 16);
  const luminance = 0.299 * r + 0.587 * g + 0.114 * b;
  return luminance < 140 ? "#ffffff" : "#1a1a1a";
}

/** Highlight tint for partisan words: side color at the given opacity. */
export function highlightColor(side: "left" | "right" | "neutral", intensity: number): string {
  if (side === "neutral" || intensity <= 0) {
    return "transparent";
  }
  const base = side === "left" ? BLUE : RED;
  const alpha = clamp(intensity, 0, 1);
  return `rgba(${base[0]}, ${base[1]}, ${base[2]}, ${alpha.toFixed(3)})`;
}
