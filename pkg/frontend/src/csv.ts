/** Readers for the result-file contract of the experiment runner. */

import { readFileSync } from "fs";

export class CsvError extends Error {
  constructor(message: string, public readonly row: number) {
    super(`${message} (row ${row})`);
  }
}

export const RATE_COLUMNS = [
  "model", "scheme", "lambda", "beta", "p", "K", "n_ref", "M", "seed",
  "n", "E_hat", "ci_lo", "ci_hi",
] as const;

export const RATIO_COLUMNS = [
  "trial", "regime", "p", "D", "lhs", "lhs_ci", "rhs", "ratio", "verdict",
] as const;

export interface RateRow {
  model: string;
  scheme: string;
  beta: number;
  n: number;
  eHat: number;
  ciLo: number;
  ciHi: number;
}

export interface TailRow {
  r: number;
  empirical: number;
  stderr: number;
  bound: number;
  vacuous: boolean;
}

function splitTable(text: string): string[][] {
  return text
    .split(/\r?\n/)
    .filter((line) => line.length > 0)
    .map((line) => line.split(","));
}

function num(cell: string, row: number, what: string): number {
  const v = Number(cell);
  if (cell === "" || Number.isNaN(v) && cell !== "nan") {
    throw new CsvError(`malformed ${what} value ${JSON.stringify(cell)}`, row);
  }
  return v;
}

export function readRateCsv(path: string): RateRow[] {
  const rows = splitTable(readFileSync(path, "utf8"));
  if (rows.length === 0) throw new CsvError("empty file", 0);
  const header = rows[0];
  if (header.join(",") !== RATE_COLUMNS.join(",")) {
    throw new CsvError(`unexpected header ${header.join(",")}`, 1);
  }
  return rows.slice(1).map((cells, i) => {
    const row = i + 2;
    if (cells.length !== RATE_COLUMNS.length) {
      throw new CsvError(`expected ${RATE_COLUMNS.length} cells, got ${cells.length}`, row);
    }
    return {
      model: cells[0],
      scheme: cells[1],
      beta: num(cells[3], row, "beta"),
      n: num(cells[9], row, "n"),
      eHat: num(cells[10], row, "E_hat"),
      ciLo: num(cells[11], row, "ci_lo"),
      ciHi: num(cells[12], row, "ci_hi"),
    };
  });
}

/** Tail trials are persisted in the ratio schema: lhs = empirical survival,
 *  rhs = the exponential bound, regime = "r=<value>[,vacuous]". */
export function readTailCsv(path: string): TailRow[] {
  const rows = splitTable(readFileSync(path, "utf8"));
  if (rows.length === 0) throw new CsvError("empty file", 0);
  if (rows[0].join(",") !== RATIO_COLUMNS.join(",")) {
    throw new CsvError(`unexpected header ${rows[0].join(",")}`, 1);
  }
  const out: TailRow[] = [];
  rows.slice(1).forEach((cells, i) => {
    const row = i + 2;
    if (cells.length !== RATIO_COLUMNS.length) {
      throw new CsvError(`expected ${RATIO_COLUMNS.length} cells, got ${cells.length}`, row);
    }
    const regime = cells[1];
    if (!regime.startsWith("r=")) return; // other trial kinds share the schema
    const r = num(regime.slice(2).split(",")[0], row, "r");
    out.push({
      r,
      empirical: num(cells[4], row, "lhs"),
      stderr: num(cells[5], row, "lhs_ci"),
      bound: num(cells[6], row, "rhs"),
      vacuous: regime.includes("vacuous"),
    });
  });
  return out;
}

export interface FitSummary {
  beta: number;
  slope: number;
  predicted: number | null;
}

/** Slopes from the runner's JSON summary, if present next to the CSV. */
export function readSummarySlopes(path: string): FitSummary[] {
  const payload = JSON.parse(readFileSync(path, "utf8"));
  const fits = payload.fits ?? [];
  return fits.map((f: Record<string, unknown>) => ({
    beta: Number(f.beta),
    slope: Number(f.slope),
    predicted: f.predicted_slope == null ? null : Number(f.predicted_slope),
  }));
}

export function summaryPathFor(csvPath: string): string {
  return csvPath.replace(/\.csv$/, "_summary.json");
}
