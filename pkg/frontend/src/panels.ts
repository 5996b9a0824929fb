/** Figure panels: training curves with a std band, and sweep summaries. */

import { CurveBand, SweepSeries } from "./stats.js";
import {
  DEFAULT_FRAME,
  Frame,
  PALETTE,
  axes,
  bandPath,
  fmt,
  innerSize,
  legend,
  linePath,
  makeScales,
  svgDocument,
} from "./svg.js";

function extent(values: number[]): [number, number] {
  let lo = Infinity;
  let hi = -Infinity;
  for (const v of values) {
    if (v < lo) lo = v;
    if (v > hi) hi = v;
  }
  return [lo, hi];
}

export function curvesPanel(bands: CurveBand[], frame: Frame = DEFAULT_FRAME, title = "training curves"): string {
  const xs = bands.flatMap((b) => b.episodes);
  const ys = bands.flatMap((b) => [
    ...b.mean.map((m, i) => m - b.std[i]),
    ...b.mean.map((m, i) => m + b.std[i]),
  ]);
  const { x, y } = makeScales(frame, extent(xs), extent(ys));
  const parts: string[] = [];
  bands.forEach((band, i) => {
    const color = PALETTE[i % PALETTE.length];
    const lower = band.mean.map((m, j) => m - band.std[j]);
    const upper = band.mean.map((m, j) => m + band.std[j]);
    parts.push(
      `<path d="${bandPath(band.episodes, lower, upper, x, y)}" fill="${color}" opacity="0.18" stroke="none"/>`,
    );
    parts.push(
      `<path d="${linePath(band.episodes, band.mean, x, y)}" fill="none" stroke="${color}" stroke-width="1.6"/>`,
    );
  });
  parts.push(axes(frame, x, y, "episode", "trailing-100 average reward"));
  parts.push(
    legend(
      bands.map((b, i) => ({
        label: `${b.label} (${b.seeds} seed${b.seeds > 1 ? "s" : ""})`,
        color: PALETTE[i % PALETTE.length],
      })),
      10,
    ),
  );
  parts.push(
    `<text x="${innerSize(frame).w / 2}" y="-12" text-anchor="middle" font-size="13">${title}</text>`,
  );
  return parts.join("\n");
}

export function sweepPanel(
  series: SweepSeries[],
  axisLabel: string,
  frame: Frame = DEFAULT_FRAME,
  title = "",
): string {
  const xs = series.flatMap((s) => s.points.map((p) => p.x));
  const ys = series.flatMap((s) =>
    s.points.flatMap((p) => [p.mean - p.std, p.mean + p.std]),
  );
  const { x, y } = makeScales(frame, extent(xs), extent(ys));
  const parts: string[] = [];
  series.forEach((s, i) => {
    const color = PALETTE[i % PALETTE.length];
    // horizontal jitter keeps grouped error bars legible
    const dx = (i - (series.length - 1) / 2) * 5;
    parts.push(
      `<path d="${linePath(s.points.map((p) => p.x), s.points.map((p) => p.mean), x, y)}" ` +
        `fill="none" stroke="${color}" stroke-width="1.3" opacity="0.7" transform="translate(${dx},0)"/>`,
    );
    for (const p of s.points) {
      const px = fmt(x(p.x) + dx);
      parts.push(
        `<line x1="${px}" y1="${fmt(y(p.mean - p.std))}" x2="${px}" y2="${fmt(y(p.mean + p.std))}" stroke="${color}" stroke-width="1.2"/>`,
        `<circle cx="${px}" cy="${fmt(y(p.mean))}" r="3" fill="${color}"/>`,
      );
    }
  });
  parts.push(axes(frame, x, y, axisLabel, "final trailing-100 average reward"));
  parts.push(
    legend(
      series.map((s, i) => ({ label: s.key, color: PALETTE[i % PALETTE.length] })),
      10,
    ),
  );
  if (title) {
    parts.push(
      `<text x="${innerSize(frame).w / 2}" y="-12" text-anchor="middle" font-size="13">${title}</text>`,
    );
  }
  return parts.join("\n");
}

function framed(content: string, frame: Frame, xShift: number): string {
  return `<g transform="translate(${frame.margin.left + xShift},${frame.margin.top})">\n${content}\n</g>`;
}

export function renderSingle(content: string, frame: Frame = DEFAULT_FRAME): string {
  return svgDocument(frame.width, frame.height, framed(content, frame, 0));
}

/** Three panels side by side: curves, antenna sweep, client sweep. */
export function renderThreePanel(
  curves: CurveBand[],
  antennaSeries: SweepSeries[],
  clientSeries: SweepSeries[],
): string {
  const frame = DEFAULT_FRAME;
  const body = [
    framed(curvesPanel(curves, frame, "(a) training curves"), frame, 0),
    framed(sweepPanel(antennaSeries, "antennas", frame, "(b) antenna count"), frame, frame.width),
    framed(sweepPanel(clientSeries, "clients", frame, "(c) client count"), frame, 2 * frame.width),
  ].join("\n");
  return svgDocument(3 * frame.width, frame.height, body);
}
