/** Unit fill colors: the first two weight components (both normalized
 * features in [0, 1]) project onto a single ramp position, rendered with
 * a viridis-style perceptual ramp. Identical weights always produce
 * identical colors. */

const RAMP: ReadonlyArray<readonly [number, number, number]> = [
  [68, 1, 84],
  [72, 36, 117],
  [65, 68, 135],
  [53, 95, 141],
  [42, 120, 142],
  [33, 145, 140],
  [34, 168, 132],
  [68, 191, 112],
  [122, 209, 81],
  [189, 223, 38],
  [253, 231, 37],
];

function clamp01(x: number): number {
  return x < 0 ? 0 : x > 1 ? 1 : x;
}

export function rampPosition(weight: ReadonlyArray<number>): number {
  const a = weight.length > 0 ? clamp01(weight[0] ?? 0) : 0;
  const b = weight.length > 1 ? clamp01(weight[1] ?? 0) : a;
  return clamp01((a + b) / 2);
}

export function colorForWeight(weight: ReadonlyArray<number>): string {
  const t = rampPosition(weight) * (RAMP.length - 1);
  const lo = Math.floor(t);
  const hi = Math.min(lo + 1, RAMP.length - 1);
  const frac = t - lo;
  const pick = (i: number) => {
    const a = RAMP[lo]![i]!;
    const b = RAMP[hi]![i]!;
    return Math.round(a + (b - a) * frac);
  };
  return `rgb(${pick(0)}, ${pick(1)}, ${pick(2)})`;
}
