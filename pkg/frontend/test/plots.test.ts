import { mkdtempSync, readFileSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { describe, expect, it } from "vitest";

import { main, runJob, buildCurveBands } from "../src/cli.js";
import { SchemaError, readSweepCsv, readTrainCsv, trainLabel } from "../src/schemas.js";
import { curveBand, rollingMean, sweepSeries } from "../src/stats.js";
import { renderThreePanel } from "../src/panels.js";

const FIX = join(__dirname, "fixtures");
const trainFiles = [
  join(FIX, "train_rdpg_fa_seed0.csv"),
  join(FIX, "train_rdpg_fa_seed1.csv"),
  join(FIX, "train_ddpg_fa_seed0.csv"),
  join(FIX, "train_ddpg_fa_seed1.csv"),
];
const antennaSweep = join(FIX, "sweep_antennas_oracle.csv");
const clientSweep = join(FIX, "sweep_clients_oracle.csv");

function scratch(): string {
  return mkdtempSync(join(tmpdir(), "plots-"));
}

describe("schemas", () => {
  it("parses real training logs", () => {
    const rows = readTrainCsv(trainFiles[0]);
    expect(rows.length).toBe(40);
    expect(rows[0].episode).toBe(1);
    expect(Number.isNaN(rows[0].critic_loss)).toBe(true); // warm-up episode
  });

  it("parses real sweep tables", () => {
    const rows = readSweepCsv(antennaSweep);
    expect(rows.length).toBe(6);
    expect(new Set(rows.map((r) => r.scenario))).toEqual(new Set(["fa", "fpa"]));
  });

  it("reports a missing column by name", () => {
    const dir = scratch();
    const bad = join(dir, "bad.csv");
    const rows = readFileSync(antennaSweep, "utf8")
      .split("\n")
      .map((line) => line.split(",").filter((_, i) => i !== 2).join(","));
    writeFileSync(bad, rows.join("\n"));
    expect(() => readSweepCsv(bad)).toThrow(/missing column 'scenario'/);
  });

  it("rejects corrupted numeric cells", () => {
    const dir = scratch();
    const bad = join(dir, "bad2.csv");
    const text = readFileSync(trainFiles[0], "utf8").replace(/^2,[^,]+/m, "2,notanumber");
    writeFileSync(bad, text);
    expect(() => readTrainCsv(bad)).toThrow(SchemaError);
  });

  it("derives labels from harness file names", () => {
    expect(trainLabel("/x/train_rdpg_fa_seed0.csv")).toBe("rdpg/fa");
    expect(trainLabel("/x/custom.csv")).toBe("custom");
  });
});

describe("stats", () => {
  it("zero-width band for a single seed", () => {
    const band = curveBand("one", [readTrainCsv(trainFiles[0])]);
    expect(band.std.every((s) => s === 0)).toBe(true);
  });

  it("positive band width for two seeds", () => {
    const band = curveBand("two", [
      readTrainCsv(trainFiles[0]),
      readTrainCsv(trainFiles[1]),
    ]);
    expect(Math.max(...band.std)).toBeGreaterThan(0);
  });

  it("rolling mean window arithmetic", () => {
    expect(rollingMean([1, 2, 3, 4], 2)).toEqual([1, 1.5, 2.5, 3.5]);
    expect(rollingMean([1, 2, 3], 1)).toEqual([1, 2, 3]);
  });

  it("groups sweep rows by scenario and agent", () => {
    const series = sweepSeries(readSweepCsv(antennaSweep));
    expect(series.map((s) => s.key).sort()).toEqual(["fa/oracle", "fpa/oracle"]);
    for (const s of series) {
      expect(s.points.map((p) => p.x)).toEqual([2, 4, 6]);
    }
  });
});

describe("rendering", () => {
  it("curves job renders every group with a band and a line", () => {
    const dir = scratch();
    const out = join(dir, "curves.svg");
    runJob({ kind: "curves", inputs: trainFiles, out, smooth: 1 });
    const svg = readFileSync(out, "utf8");
    expect(svg.startsWith("<svg")).toBe(true);
    expect(svg).toContain("rdpg/fa (2 seeds)");
    expect(svg).toContain("ddpg/fa (2 seeds)");
    expect(svg).toContain("episode");
  });

  it("single-seed curves carry a zero-width band", () => {
    const bands = buildCurveBands([trainFiles[0]], 1);
    expect(bands[0].seeds).toBe(1);
    const lower = bands[0].mean.map((m, i) => m - bands[0].std[i]);
    expect(lower).toEqual(bands[0].mean);
  });

  it("sweep jobs validate the axis", () => {
    const dir = scratch();
    expect(() =>
      runJob({
        kind: "client_sweep",
        inputs: [antennaSweep],
        out: join(dir, "x.svg"),
        smooth: 1,
      }),
    ).toThrow(/expected axis_name 'clients'/);
  });

  it("three-panel figure from the experiment fixtures", () => {
    const dir = scratch();
    const out = join(dir, "panel.svg");
    runJob({
      kind: "panel",
      inputs: [],
      curves: trainFiles,
      antennaSweep,
      clientSweep,
      out,
      smooth: 1,
    });
    const svg = readFileSync(out, "utf8");
    expect(svg).toContain("(a) training curves");
    expect(svg).toContain("(b) antenna count");
    expect(svg).toContain("(c) client count");
  });

  it("rendering is deterministic and never mutates inputs", () => {
    const before = trainFiles.map((p) => readFileSync(p, "utf8"));
    const dir = scratch();
    const a = join(dir, "a.svg");
    const b = join(dir, "b.svg");
    runJob({ kind: "curves", inputs: trainFiles, out: a, smooth: 3 });
    runJob({ kind: "curves", inputs: trainFiles, out: b, smooth: 3 });
    expect(readFileSync(a, "utf8")).toBe(readFileSync(b, "utf8"));
    trainFiles.forEach((p, i) => {
      expect(readFileSync(p, "utf8")).toBe(before[i]);
    });
  });

  it("direct three-panel call works from parsed parts", () => {
    const svg = renderThreePanel(
      buildCurveBands(trainFiles, 1),
      sweepSeries(readSweepCsv(antennaSweep)),
      sweepSeries(readSweepCsv(clientSweep)),
    );
    expect(svg.match(/<g transform="translate/g)!.length).toBeGreaterThanOrEqual(3);
  });
});

describe("cli", () => {
  it("exits nonzero with a message on schema mismatch", async () => {
    const dir = scratch();
    const code = await main([
      "--kind",
      "client_sweep",
      "--in",
      antennaSweep,
      "--out",
      join(dir, "x.svg"),
    ]);
    expect(code).toBe(1);
  });

  it("writes the requested output on success", async () => {
    const dir = scratch();
    const out = join(dir, "fig.svg");
    const code = await main(["--kind", "curves", "--in", ...trainFiles, "--out", out]);
    expect(code).toBe(0);
    expect(readFileSync(out, "utf8")).toContain("<svg");
  });
});
