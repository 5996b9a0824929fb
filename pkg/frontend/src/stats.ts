/** Cross-seed aggregation for the figure panels. */

import { SchemaError, TrainRow, SweepRow } from "./schemas.js";

export interface CurveBand {
  label: string;
  episodes: number[];
  mean: number[];
  std: number[]; // zero-width for a single seed
  seeds: number;
}

/** Mean and standard deviation of ravg_100 across seeds, per episode. */
export function curveBand(label: string, perSeed: TrainRow[][], smooth = 1): CurveBand {
  if (perSeed.length === 0) {
    throw new SchemaError(`${label}: at least one seed required`);
  }
  const episodes = perSeed[0].map((row) => row.episode);
  for (const rows of perSeed) {
    if (rows.length !== episodes.length) {
      throw new SchemaError(`${label}: seed logs differ in episode count`);
    }
  }
  const mean: number[] = [];
  const std: number[] = [];
  for (let i = 0; i < episodes.length; i++) {
    const values = perSeed.map((rows) => rows[i].ravg_100);
    const m = values.reduce((a, b) => a + b, 0) / values.length;
    const variance =
      values.reduce((a, b) => a + (b - m) * (b - m), 0) / values.length;
    mean.push(m);
    std.push(Math.sqrt(variance));
  }
  return {
    label,
    episodes,
    mean: rollingMean(mean, smooth),
    std: rollingMean(std, smooth),
    seeds: perSeed.length,
  };
}

export function rollingMean(values: number[], window: number): number[] {
  if (window <= 1) {
    return values.slice();
  }
  const out: number[] = [];
  for (let i = 0; i < values.length; i++) {
    const start = Math.max(0, i + 1 - window);
    const slice = values.slice(start, i + 1);
    out.push(slice.reduce((a, b) => a + b, 0) / slice.length);
  }
  return out;
}

export interface SweepSeries {
  key: string; // "scenario/agent"
  points: { x: number; mean: number; std: number }[];
}

export function sweepSeries(rows: SweepRow[]): SweepSeries[] {
  const byKey = new Map<string, SweepRow[]>();
  for (const row of rows) {
    const key = `${row.scenario}/${row.agent}`;
    if (!byKey.has(key)) {
      byKey.set(key, []);
    }
    byKey.get(key)!.push(row);
  }
  return [...byKey.entries()].map(([key, group]) => ({
    key,
    points: group
      .slice()
      .sort((a, b) => a.axis_value - b.axis_value)
      .map((row) => ({
        x: row.axis_value,
        mean: row.final_ravg_mean,
        std: row.final_ravg_std,
      })),
  }));
}
