/** Deterministic SVG assembly helpers (no DOM, no timestamps). */

import { scaleLinear, ScaleLinear } from "d3-scale";
import { area, line } from "d3-shape";

export const PALETTE = [
  "#1f77b4",
  "#d62728",
  "#2ca02c",
  "#9467bd",
  "#ff7f0e",
  "#8c564b",
  "#17becf",
  "#7f7f7f",
];

export interface Frame {
  width: number;
  height: number;
  margin: { top: number; right: number; bottom: number; left: number };
}

export const DEFAULT_FRAME: Frame = {
  width: 470,
  height: 400,
  margin: { top: 28, right: 14, bottom: 44, left: 62 },
};

export function innerSize(frame: Frame): { w: number; h: number } {
  return {
    w: frame.width - frame.margin.left - frame.margin.right,
    h: frame.height - frame.margin.top - frame.margin.bottom,
  };
}

const fmt = (v: number): string => {
  if (!Number.isFinite(v)) {
    return "0";
  }
  const rounded = Number(v.toPrecision(6));
  return Object.is(rounded, -0) ? "0" : String(rounded);
};

export function makeScales(
  frame: Frame,
  xDomain: [number, number],
  yDomain: [number, number],
): { x: ScaleLinear<number, number>; y: ScaleLinear<number, number> } {
  const { w, h } = innerSize(frame);
  const pad = (d: [number, number]): [number, number] => {
    if (d[0] === d[1]) {
      const eps = d[0] === 0 ? 1 : Math.abs(d[0]) * 0.1;
      return [d[0] - eps, d[1] + eps];
    }
    return d;
  };
  return {
    x: scaleLinear().domain(pad(xDomain)).range([0, w]),
    y: scaleLinear().domain(pad(yDomain)).range([h, 0]),
  };
}

export function linePath(
  xs: number[],
  ys: number[],
  x: ScaleLinear<number, number>,
  y: ScaleLinear<number, number>,
): string {
  const gen = line<number>()
    .x((_, i) => x(xs[i]))
    .y((_, i) => y(ys[i]));
  return gen(xs.map((_, i) => i)) ?? "";
}

export function bandPath(
  xs: number[],
  lower: number[],
  upper: number[],
  x: ScaleLinear<number, number>,
  y: ScaleLinear<number, number>,
): string {
  const gen = area<number>()
    .x((_, i) => x(xs[i]))
    .y0((_, i) => y(lower[i]))
    .y1((_, i) => y(upper[i]));
  return gen(xs.map((_, i) => i)) ?? "";
}

export function axes(
  frame: Frame,
  x: ScaleLinear<number, number>,
  y: ScaleLinear<number, number>,
  xLabel: string,
  yLabel: string,
): string {
  const { w, h } = innerSize(frame);
  const parts: string[] = [];
  parts.push(
    `<line x1="0" y1="${h}" x2="${w}" y2="${h}" stroke="#333" stroke-width="1"/>`,
    `<line x1="0" y1="0" x2="0" y2="${h}" stroke="#333" stroke-width="1"/>`,
  );
  for (const tick of x.ticks(6)) {
    const px = fmt(x(tick));
    parts.push(
      `<line x1="${px}" y1="${h}" x2="${px}" y2="${h + 5}" stroke="#333"/>`,
      `<text x="${px}" y="${h + 18}" text-anchor="middle" font-size="11">${fmt(tick)}</text>`,
    );
  }
  for (const tick of y.ticks(6)) {
    const py = fmt(y(tick));
    parts.push(
      `<line x1="-5" y1="${py}" x2="0" y2="${py}" stroke="#333"/>`,
      `<text x="-8" y="${py}" text-anchor="end" dominant-baseline="middle" font-size="11">${fmt(tick)}</text>`,
    );
  }
  parts.push(
    `<text x="${w / 2}" y="${h + 36}" text-anchor="middle" font-size="12">${xLabel}</text>`,
    `<text transform="translate(${-frame.margin.left + 14},${h / 2}) rotate(-90)" text-anchor="middle" font-size="12">${yLabel}</text>`,
  );
  return parts.join("\n");
}

export function legend(entries: { label: string; color: string }[], xOffset: number): string {
  return entries
    .map(
      (entry, i) =>
        `<g transform="translate(${xOffset},${6 + 16 * i})">` +
        `<rect width="12" height="4" y="-2" fill="${entry.color}"/>` +
        `<text x="16" y="3" font-size="11">${entry.label}</text></g>`,
    )
    .join("\n");
}

export function svgDocument(width: number, height: number, body: string): string {
  return (
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" ` +
    `viewBox="0 0 ${width} ${height}" font-family="Helvetica, Arial, sans-serif">\n` +
    `<rect width="${width}" height="${height}" fill="white"/>\n${body}\n</svg>\n`
  );
}

export { fmt };
