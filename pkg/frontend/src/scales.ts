/** Scales, dot stacking, and the density estimate behind the violins. */

export interface LinearScale {
  (value: number): number;
  domain: [number, number];
  range: [number, number];
  invert(pixel: number): number;
}

export function linearScale(domain: [number, number], range: [number, number]): LinearScale {
  const [d0, d1] = domain;
  const [r0, r1] = range;
  const span = d1 - d0 || 1;
  const scale = ((value: number) => r0 + ((value - d0) / span) * (r1 - r0)) as LinearScale;
  scale.domain = domain;
  scale.range = range;
  scale.invert = (pixel: number) => d0 + ((pixel - r0) / (r1 - r0 || 1)) * span;
  return scale;
}

export function extent(values: number[]): [number, number] {
  let lo = Infinity;
  let hi = -Infinity;
  for (const v of values) {
    if (v < lo) lo = v;
    if (v > hi) hi = v;
  }
  if (lo === Infinity) return [0, 1];
  if (lo === hi) return [lo - 0.5, hi + 0.5];
  return [lo, hi];
}

export function ticks(lo: number, hi: number, count = 5): number[] {
  const span = hi - lo;
  if (span <= 0) return [lo];
  const rawStep = span / count;
  const magnitude = 10 ** Math.floor(Math.log10(rawStep));
  const candidates = [1, 2, 5, 10].map((m) => m * magnitude);
  const step = candidates.find((c) => span / c <= count) ?? candidates[3]!;
  const start = Math.ceil(lo / step) * step;
  const out: number[] = [];
  for (let v = start; v <= hi + 1e-12; v += step) out.push(Number(v.toPrecision(12)));
  return out;
}

export interface StackedDot<T> {
  item: T;
  /** bin center along the value axis */
  x: number;
  /** 1-based position within the bin's stack */
  level: number;
}

/**
 * Dot-plot stacking with a fixed bin width of range/40: items are grouped
 * into value bins and stacked upward within each bin.
 */
export function stackDots<T>(
  items: T[],
  value: (item: T) => number,
  domain: [number, number],
  bins = 40,
): StackedDot<T>[] {
  const [lo, hi] = domain;
  const width = (hi - lo) / bins || 1;
  const counts = new Map<number, number>();
  const out: StackedDot<T>[] = [];
  const sorted = [...items].sort((a, b) => value(a) - value(b));
  for (const item of sorted) {
    const v = value(item);
    const bin = Math.min(bins - 1, Math.max(0, Math.floor((v - lo) / width)));
    const level = (counts.get(bin) ?? 0) + 1;
    counts.set(bin, level);
    out.push({ item, x: lo + (bin + 0.5) * width, level });
  }
  return out;
}

/** Gaussian kernel density on a fixed grid; bandwidth by Scott's rule. */
export function density(values: number[], gridSize = 40): { value: number; weight: number }[] {
  if (values.length === 0) return [];
  const [lo, hi] = extent(values);
  const mean = values.reduce((a, b) => a + b, 0) / values.length;
  const sd = Math.sqrt(
    values.reduce((a, b) => a + (b - mean) ** 2, 0) / Math.max(values.length - 1, 1),
  );
  const bandwidth = Math.max(1.06 * (sd || 1) * values.length ** -0.2, (hi - lo) / gridSize || 1);
  const norm = Math.sqrt(2 * Math.PI);
  const grid: { value: number; weight: number }[] = [];
  for (let i = 0; i <= gridSize; i++) {
    const v = lo + ((hi - lo) * i) / gridSize;
    let weight = 0;
    for (const x of values) {
      const z = (v - x) / bandwidth;
      weight += Math.exp(-0.5 * z * z) / norm;
    }
    grid.push({ value: v, weight: weight / (values.length * bandwidth) });
  }
  return grid;
}

/** Sequential blue ramp; t in [0,1], larger t darker (better quality). */
export function blueRamp(t: number): string {
  const clamped = Math.max(0, Math.min(1, t));
  const lightness = 88 - clamped * 55;
  return `hsl(210, 70%, ${lightness}%)`;
}

/** Ramp for decision-graph nodes: darker with higher sensitivity. */
export function sensitivityShade(score: number | null, max: number): string {
  if (score === null || !(max > 0)) return "hsl(210, 10%, 82%)";
  return blueRamp(Math.max(0, score) / max);
}
