/** Semilog-y tail figures: empirical survival probabilities with the
 *  exponential bound 2 exp(-r^2 / (2 sigma^2)) overlaid. */

import { existsSync, readFileSync, writeFileSync } from "fs";

import { TailRow, readTailCsv, summaryPathFor } from "./csv.js";
import { PALETTE, Svg, linearScale, logScale } from "./svg.js";

export interface TailPlotResult {
  points: number;
  /** bound-minus-empirical margins in plot (pixel) coordinates, one per
   *  plotted point; positive means the bound curve sits above the point */
  pixelMargins: number[];
}

function sigmaFrom(rows: TailRow[], summaryPath: string): number {
  if (existsSync(summaryPath)) {
    const payload = JSON.parse(readFileSync(summaryPath, "utf8"));
    if (typeof payload.sigma === "number") return payload.sigma;
  }
  // invert the bound at the most informative row: bound = 2 exp(-r^2/2s^2)
  const row = rows.filter((r) => r.bound < 2).sort((a, b) => a.bound - b.bound)[0];
  if (!row) throw new Error("cannot recover sigma: every bound row is trivial");
  return row.r / Math.sqrt(2 * Math.log(2 / row.bound));
}

export function plotTail(
  csvPath: string,
  outPath: string,
  summaryPath?: string,
  warn: (msg: string) => void = (m) => console.warn(m),
): TailPlotResult {
  const rows = readTailCsv(csvPath);
  if (rows.length === 0) throw new Error("no tail rows in the CSV");
  const sigma = sigmaFrom(rows, summaryPath ?? summaryPathFor(csvPath));

  const W = 640;
  const H = 420;
  const M = { left: 76, right: 20, top: 20, bottom: 84 };
  const rLo = 0;
  const rHi = Math.max(...rows.map((r) => r.r)) * 1.1;
  const positives = rows.map((r) => r.empirical).filter((p) => p > 0);
  const floor = Math.min(1e-6, ...(positives.length ? positives : [1]));
  const pLo = floor / 10;
  const sx = linearScale(rLo, rHi, M.left, W - M.right);
  const sy = logScale(pLo, 2.5, H - M.bottom, M.top);

  const svg = new Svg(W, H);
  for (const t of sx.ticks()) {
    svg.line(sx(t), H - M.bottom, sx(t), M.top, "#dddddd");
    svg.text(sx(t), H - M.bottom + 16, t.toPrecision(3), 'text-anchor="middle" font-size="11"');
  }
  for (const t of sy.ticks()) {
    svg.line(M.left, sy(t), W - M.right, sy(t), "#dddddd");
    svg.text(M.left - 6, sy(t) + 4, t.toExponential(0), 'text-anchor="end" font-size="11"');
  }
  svg.line(M.left, H - M.bottom, W - M.right, H - M.bottom, "#333333");
  svg.line(M.left, H - M.bottom, M.left, M.top, "#333333");
  svg.text((M.left + W - M.right) / 2, H - M.bottom + 34, "r",
    'text-anchor="middle" font-size="12"');
  svg.text(18, (M.top + H - M.bottom) / 2, "P(sup >= r)",
    'text-anchor="middle" font-size="12" transform="rotate(-90 18 ' +
      String((M.top + H - M.bottom) / 2) + ')"');

  // bound curve, clipped at the plot floor
  const curve: Array<[number, number]> = [];
  for (let i = 0; i <= 240; i++) {
    const r = rLo + ((rHi - rLo) * i) / 240;
    const b = Math.min(2.0 * Math.exp(-(r * r) / (2 * sigma * sigma)), 2.4);
    curve.push([sx(r), sy(Math.max(b, pLo))]);
  }
  svg.path(curve, PALETTE[1], 'stroke-width="1.8"');

  const margins: number[] = [];
  let plotted = 0;
  for (const row of rows) {
    const y = sy(Math.max(row.empirical, pLo));
    const bound = 2.0 * Math.exp(-(row.r * row.r) / (2 * sigma * sigma));
    margins.push(y - sy(Math.max(bound, pLo)));  // y grows downward
    svg.circle(sx(row.r), y, 3.5, PALETTE[0]);
    if (row.empirical === 0) {
      warn(`empirical survival is 0 at r=${row.r}; drawn at the plot floor`);
    }
    plotted++;
  }

  svg.text(M.left + 20, M.top + 16,
    `bound 2 exp(-r^2 / (2 sigma^2)), sigma = ${sigma.toFixed(3)}`,
    'font-size="12" fill="' + PALETTE[1] + '"');
  svg.text(M.left + 20, M.top + 32, "empirical survival",
    'font-size="12" fill="' + PALETTE[0] + '"');

  writeFileSync(outPath, svg.render());
  return { points: plotted, pixelMargins: margins };
}
