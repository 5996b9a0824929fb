/**
 * Standalone figure generator for the experiment CSVs.
 *
 * Kinds:
 *   curves        --in train_*.csv ...        (one or more seed logs)
 *   antenna_sweep --in sweep_antennas_*.csv
 *   client_sweep  --in sweep_clients_*.csv
 *   panel         --curves ... --antenna-sweep ... --client-sweep ...
 *
 * Output is a deterministic SVG; input files are never modified.
 */

import { writeFileSync } from "node:fs";
import yargs from "yargs";
import { hideBin } from "yargs/helpers";
import { SchemaError, readSweepCsv, readTrainCsv, trainLabel } from "./schemas.js";
import { CurveBand, curveBand, sweepSeries } from "./stats.js";
import { renderSingle, renderThreePanel, curvesPanel, sweepPanel } from "./panels.js";

export function buildCurveBands(paths: string[], smooth: number): CurveBand[] {
  const groups = new Map<string, string[]>();
  for (const path of paths) {
    const label = trainLabel(path);
    if (!groups.has(label)) {
      groups.set(label, []);
    }
    groups.get(label)!.push(path);
  }
  return [...groups.entries()].map(([label, files]) =>
    curveBand(label, files.map(readTrainCsv), smooth),
  );
}

export interface PanelJob {
  kind: "curves" | "antenna_sweep" | "client_sweep" | "panel";
  inputs: string[];
  curves?: string[];
  antennaSweep?: string;
  clientSweep?: string;
  out: string;
  smooth: number;
}

export function runJob(job: PanelJob): string {
  let svg: string;
  if (job.kind === "curves") {
    svg = renderSingle(curvesPanel(buildCurveBands(job.inputs, job.smooth)));
  } else if (job.kind === "antenna_sweep" || job.kind === "client_sweep") {
    const rows = job.inputs.flatMap(readSweepCsv);
    const axis = job.kind === "antenna_sweep" ? "antennas" : "clients";
    const mismatched = rows.filter((r) => r.axis_name !== axis);
    if (mismatched.length > 0) {
      throw new SchemaError(
        `expected axis_name '${axis}', found '${mismatched[0].axis_name}'`,
      );
    }
    svg = renderSingle(sweepPanel(sweepSeries(rows), axis));
  } else {
    if (!job.curves?.length || !job.antennaSweep || !job.clientSweep) {
      throw new SchemaError(
        "panel kind needs --curves, --antenna-sweep and --client-sweep",
      );
    }
    svg = renderThreePanel(
      buildCurveBands(job.curves, job.smooth),
      sweepSeries(readSweepCsv(job.antennaSweep)),
      sweepSeries(readSweepCsv(job.clientSweep)),
    );
  }
  writeFileSync(job.out, svg);
  return job.out;
}

export async function main(argv: string[]): Promise<number> {
  const args = await yargs(argv)
    .option("kind", {
      choices: ["curves", "antenna_sweep", "client_sweep", "panel"] as const,
      demandOption: true,
    })
    .option("in", { type: "string", array: true, default: [] as string[] })
    .option("curves", { type: "string", array: true })
    .option("antenna-sweep", { type: "string" })
    .option("client-sweep", { type: "string" })
    .option("out", { type: "string", demandOption: true })
    .option("smooth", { type: "number", default: 1 })
    .strict()
    .parse();
  try {
    const out = runJob({
      kind: args.kind,
      inputs: args.in,
      curves: args.curves,
      antennaSweep: args["antenna-sweep"],
      clientSweep: args["client-sweep"],
      out: args.out,
      smooth: args.smooth,
    });
    console.log(out);
    return 0;
  } catch (err) {
    if (err instanceof SchemaError) {
      console.error(`schema error: ${err.message}`);
      return 1;
    }
    throw err;
  }
}

const invokedDirectly =
  process.argv[1] !== undefined && import.meta.url.endsWith(process.argv[1].split("/").pop() ?? "");
if (invokedDirectly) {
  main(hideBin(process.argv)).then((code) => {
    process.exitCode = code;
  });
}
