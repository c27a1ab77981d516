import type { SweepRow } from "./csv.js";

export interface SeriesPoint {
  L: number;
  mean: number;
  std: number;
  count: number;
}

export interface Series {
  label: string;
  /** numeric sort key for legend and palette order */
  order: number;
  points: SeriesPoint[];
}

export function mean(values: number[]): number {
  let s = 0;
  for (const v of values) s += v;
  return s / values.length;
}

/** sample standard deviation; 0 for fewer than two values */
export function sampleStd(values: number[]): number {
  if (values.length < 2) return 0;
  const m = mean(values);
  let s = 0;
  for (const v of values) s += (v - m) * (v - m);
  return Math.sqrt(s / (values.length - 1));
}

export function groupBy<T>(items: T[], key: (item: T) => string): Map<string, T[]> {
  const out = new Map<string, T[]>();
  for (const item of items) {
    const k = key(item);
    const bucket = out.get(k);
    if (bucket) bucket.push(item);
    else out.set(k, [item]);
  }
  return out;
}

/**
 * Collapse one curve group to per-depth mean and stddev across seeds.
 * A depth where any seed's log norm is non-finite is omitted: the mean of a
 * set containing -inf is -inf, which has no place on a finite axis. The
 * curve visibly stops where networks start dying.
 */
export function depthSeries(rows: SweepRow[], label: string, order: number): Series {
  const byDepth = groupBy(rows, (r) => String(r.L));
  const points: SeriesPoint[] = [];
  for (const bucket of byDepth.values()) {
    const values = bucket.map((r) => r.logJacNorm);
    if (!values.every((v) => Number.isFinite(v))) continue;
    points.push({
      L: bucket[0]!.L,
      mean: mean(values),
      std: sampleStd(values),
      count: values.length,
    });
  }
  points.sort((a, b) => a.L - b.L);
  return { label, order, points };
}

/** numeric value of a raw column string, NaN-safe for sorting ("" sorts first) */
export function orderKey(raw: string): number {
  if (raw === "") return -Infinity;
  const v = Number(raw);
  return Number.isFinite(v) ? v : Infinity;
}

export function sortSeries(series: Series[]): Series[] {
  return [...series].sort((a, b) => (a.order - b.order) || a.label.localeCompare(b.label));
}
