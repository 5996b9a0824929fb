/**
 * CSV schemas for the experiment outputs.
 *
 * Training log: episode, mean_reward, ravg_100, actor_loss, critic_loss, seed
 * (one file per seed; loss columns are NaN before the first update).
 * Sweep table: axis_name, axis_value, scenario, agent, final_ravg_mean,
 * final_ravg_std, seeds.
 */

import { readFileSync } from "node:fs";
import { basename } from "node:path";
import Papa from "papaparse";
import { z } from "zod";

export class SchemaError extends Error {}

const finiteNumber = z.number().finite();
// loss columns hold NaN during warm-up episodes
const maybeNanNumber = z.union([z.number(), z.nan()]);

export const trainRowSchema = z.object({
  episode: z.number().int().min(1),
  mean_reward: finiteNumber,
  ravg_100: finiteNumber,
  actor_loss: maybeNanNumber,
  critic_loss: maybeNanNumber,
  seed: z.number().int(),
});

export const sweepRowSchema = z.object({
  axis_name: z.string().min(1),
  axis_value: finiteNumber,
  scenario: z.enum(["fa", "fpa"]),
  agent: z.string().min(1),
  final_ravg_mean: finiteNumber,
  final_ravg_std: finiteNumber.min(0),
  seeds: z.union([z.string(), z.number()]).transform(String),
});

export type TrainRow = z.infer<typeof trainRowSchema>;
export type SweepRow = z.infer<typeof sweepRowSchema>;

function parseCsv(path: string): Record<string, string>[] {
  const text = readFileSync(path, "utf8");
  const parsed = Papa.parse<Record<string, string>>(text.trim(), {
    header: true,
    skipEmptyLines: true,
  });
  if (parsed.errors.length > 0) {
    const first = parsed.errors[0];
    throw new SchemaError(`${path}: malformed CSV (${first.message})`);
  }
  return parsed.data;
}

function coerceNumbers(record: Record<string, string>): Record<string, unknown> {
  const out: Record<string, unknown> = {};
  for (const [key, value] of Object.entries(record)) {
    const num = Number(value);
    out[key] = value !== "" && (Number.isFinite(num) || value === "nan" || value === "inf" || value === "-inf")
      ? (value === "nan" ? NaN : value === "inf" ? Infinity : value === "-inf" ? -Infinity : num)
      : value;
  }
  return out;
}

function validateRows<S extends z.ZodTypeAny>(
  path: string,
  rows: Record<string, string>[],
  schema: S,
  expectedColumns: string[],
): z.output<S>[] {
  if (rows.length === 0) {
    throw new SchemaError(`${path}: no data rows`);
  }
  const present = Object.keys(rows[0]);
  for (const column of expectedColumns) {
    if (!present.includes(column)) {
      throw new SchemaError(`${path}: missing column '${column}'`);
    }
  }
  return rows.map((row, index) => {
    const result = schema.safeParse(coerceNumbers(row));
    if (!result.success) {
      const issue = result.error.issues[0];
      throw new SchemaError(
        `${path}:row ${index + 2}: ${issue.path.join(".")} ${issue.message}`,
      );
    }
    return result.data;
  });
}

export function readTrainCsv(path: string): TrainRow[] {
  return validateRows(path, parseCsv(path), trainRowSchema, [
    "episode",
    "mean_reward",
    "ravg_100",
    "actor_loss",
    "critic_loss",
    "seed",
  ]);
}

export function readSweepCsv(path: string): SweepRow[] {
  return validateRows(path, parseCsv(path), sweepRowSchema, [
    "axis_name",
    "axis_value",
    "scenario",
    "agent",
    "final_ravg_mean",
    "final_ravg_std",
    "seeds",
  ]);
}

/** Label for a training CSV: "agent/scenario" from the harness file naming,
 * falling back to the base name. */
export function trainLabel(path: string): string {
  const match = basename(path).match(/^train_([a-z]+)_([a-z]+)_seed(-?\d+)/);
  if (match) {
    return `${match[1]}/${match[2]}`;
  }
  return basename(path).replace(/\.csv$/, "");
}
