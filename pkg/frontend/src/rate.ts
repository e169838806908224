/** Log-log rate figures: per-beta series with CI bars, fitted line, and the
 *  predicted-slope reference line, slopes printed in the legend. */

import { existsSync, writeFileSync } from "fs";

import {
  FitSummary,
  RateRow,
  readRateCsv,
  readSummarySlopes,
  summaryPathFor,
} from "./csv.js";
import { PALETTE, Svg, logScale } from "./svg.js";

export interface RatePlotResult {
  series: number;
  skippedRows: number;
  legend: string[];
}

interface Series {
  key: string;
  beta: number;
  rows: RateRow[];
  slope: number;
  intercept: number;
  predicted: number | null;
  fromSummary: boolean;
}

function leastSquares(xs: number[], ys: number[]): { slope: number; intercept: number } {
  const n = xs.length;
  const mx = xs.reduce((a, b) => a + b, 0) / n;
  const my = ys.reduce((a, b) => a + b, 0) / n;
  let sxx = 0;
  let sxy = 0;
  for (let i = 0; i < n; i++) {
    sxx += (xs[i] - mx) ** 2;
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  const slope = sxy / sxx;
  return { slope, intercept: my - slope * mx };
}

function buildSeries(rows: RateRow[], summaries: FitSummary[], warn: (msg: string) => void) {
  const groups = new Map<string, RateRow[]>();
  let skipped = 0;
  for (const row of rows) {
    if (!(row.eHat > 0)) {
      warn(`skipping zero-error row at n=${row.n} (beta=${row.beta})`);
      skipped++;
      continue;
    }
    const key = `${row.model}/${row.scheme} beta=${row.beta}`;
    if (!groups.has(key)) groups.set(key, []);
    groups.get(key)!.push(row);
  }
  const series: Series[] = [];
  for (const [key, rs] of groups) {
    if (rs.length < 4) {
      throw new Error(`need at least 4 positive rows per series, got ${rs.length} for ${key}`);
    }
    rs.sort((a, b) => a.n - b.n);
    const local = leastSquares(rs.map((r) => Math.log(r.n)), rs.map((r) => Math.log(r.eHat)));
    const summary = summaries.find((s) => Math.abs(s.beta - rs[0].beta) < 1e-12);
    const slope = summary ? summary.slope : local.slope;
    // anchor the drawn line at the data centroid with the displayed slope
    const mx = rs.reduce((a, r) => a + Math.log(r.n), 0) / rs.length;
    const my = rs.reduce((a, r) => a + Math.log(r.eHat), 0) / rs.length;
    series.push({
      key,
      beta: rs[0].beta,
      rows: rs,
      slope,
      intercept: my - slope * mx,
      predicted: summary ? summary.predicted : null,
      fromSummary: Boolean(summary),
    });
  }
  return { series, skipped };
}

export function plotRate(
  csvPath: string,
  outPath: string,
  summaryPath?: string,
  warn: (msg: string) => void = (m) => console.warn(m),
): RatePlotResult {
  const rows = readRateCsv(csvPath);
  const sPath = summaryPath ?? summaryPathFor(csvPath);
  const summaries = existsSync(sPath) ? readSummarySlopes(sPath) : [];
  const { series, skipped } = buildSeries(rows, summaries, warn);
  if (series.length === 0) throw new Error("no plottable series in the CSV");

  const W = 640;
  const H = 440;
  const M = { left: 70, right: 20, top: 20, bottom: 115 };
  const all = series.flatMap((s) => s.rows);
  const nLo = Math.min(...all.map((r) => r.n)) / 1.3;
  const nHi = Math.max(...all.map((r) => r.n)) * 1.3;
  const eVals = all.flatMap((r) => [r.eHat, Math.max(r.ciLo, r.eHat / 10), r.ciHi]);
  const eLo = Math.min(...eVals) / 2;
  const eHi = Math.max(...eVals) * 2;
  const sx = logScale(nLo, nHi, M.left, W - M.right);
  const sy = logScale(eLo, eHi, H - M.bottom, M.top);

  const svg = new Svg(W, H);
  for (const t of sx.ticks()) {
    svg.line(sx(t), H - M.bottom, sx(t), M.top, "#dddddd");
    svg.text(sx(t), H - M.bottom + 16, String(t), 'text-anchor="middle" font-size="11"');
  }
  for (const t of sy.ticks()) {
    svg.line(M.left, sy(t), W - M.right, sy(t), "#dddddd");
    svg.text(M.left - 6, sy(t) + 4, t.toExponential(0), 'text-anchor="end" font-size="11"');
  }
  svg.line(M.left, H - M.bottom, W - M.right, H - M.bottom, "#333333");
  svg.line(M.left, H - M.bottom, M.left, M.top, "#333333");
  svg.text((M.left + W - M.right) / 2, H - M.bottom + 34, "n (time steps)",
    'text-anchor="middle" font-size="12"');
  svg.text(16, (M.top + H - M.bottom) / 2, "E(n)",
    'text-anchor="middle" font-size="12" transform="rotate(-90 16 ' +
      String((M.top + H - M.bottom) / 2) + ')"');

  const legend: string[] = [];
  series.forEach((s, i) => {
    const color = PALETTE[i % PALETTE.length];
    for (const r of s.rows) {
      const x = sx(r.n);
      if (r.ciHi > 0 && r.ciLo > 0) {
        svg.line(x, sy(r.ciLo), x, sy(r.ciHi), color, 'stroke-width="1.5"');
        svg.line(x - 3, sy(r.ciLo), x + 3, sy(r.ciLo), color, "");
        svg.line(x - 3, sy(r.ciHi), x + 3, sy(r.ciHi), color, "");
      }
      svg.circle(x, sy(r.eHat), 3.2, color);
    }
    const nMin = s.rows[0].n;
    const nMax = s.rows[s.rows.length - 1].n;
    const lineAt = (n: number) => Math.exp(s.intercept + s.slope * Math.log(n));
    svg.path(
      [[sx(nMin), sy(lineAt(nMin))], [sx(nMax), sy(lineAt(nMax))]],
      color,
      'stroke-width="1.6"',
    );
    let label = `${s.key}: slope ${s.slope.toFixed(3)}`;
    if (s.predicted !== null) {
      const predAt = (n: number) =>
        Math.exp(Math.log(lineAt(nMin)) + s.predicted! * (Math.log(n) - Math.log(nMin)));
      svg.path(
        [[sx(nMin), sy(predAt(nMin))], [sx(nMax), sy(predAt(nMax))]],
        color,
        'stroke-width="1.2" stroke-dasharray="6 4"',
      );
      label += `, predicted ${s.predicted.toFixed(3)}`;
    }
    legend.push(label);
  });

  legend.forEach((label, i) => {
    const y = H - M.bottom + 52 + 16 * i;
    const color = PALETTE[i % PALETTE.length];
    svg.line(M.left, y - 4, M.left + 22, y - 4, color, 'stroke-width="2"');
    svg.text(M.left + 28, y, label, 'font-size="12"');
  });

  writeFileSync(outPath, svg.render());
  return { series: series.length, skippedRows: skipped, legend };
}
