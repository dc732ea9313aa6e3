/**
 * Readers for the simulation output files. All readers are strict about
 * headers and shapes and name the offending column or count in errors;
 * none of them ever writes.
 */

import { readFileSync } from "node:fs";

export interface ErrorRow {
  family: string;
  order: number;
  epsilon: number;
  dt: number;
  /** Error columns; null where the cell left the field empty. */
  values: Record<string, number | null>;
  status: string;
}

export const ERROR_COLUMNS = [
  "x_err_ref",
  "w_err_ref_scaled",
  "e_err_ref",
  "x_err_limit",
  "w_err_drift",
  "e_err_limit",
] as const;

const ERRORS_HEADER = ["family", "order", "epsilon", "dt", ...ERROR_COLUMNS, "status"];

function splitCsv(text: string): string[][] {
  return text
    .split(/\r?\n/)
    .filter((line) => line.length > 0)
    .map((line) => line.split(","));
}

function requireColumns(path: string, header: string[], required: readonly string[]): void {
  for (const col of required) {
    if (!header.includes(col)) {
      throw new Error(`${path}: missing column '${col}'`);
    }
  }
}

export function readErrorsCsv(path: string): ErrorRow[] {
  const rows = splitCsv(readFileSync(path, "utf-8"));
  if (rows.length === 0) throw new Error(`${path}: empty file`);
  requireColumns(path, rows[0], ERRORS_HEADER);
  const idx = new Map(rows[0].map((name, i) => [name, i]));
  return rows.slice(1).map((cells, rowNum) => {
    if (cells.length !== rows[0].length) {
      throw new Error(`${path}: row ${rowNum + 2} has ${cells.length} cells, expected ${rows[0].length}`);
    }
    const values: Record<string, number | null> = {};
    for (const col of ERROR_COLUMNS) {
      const raw = cells[idx.get(col)!];
      values[col] = raw === "" ? null : Number(raw);
    }
    return {
      family: cells[idx.get("family")!],
      order: Number(cells[idx.get("order")!]),
      epsilon: Number(cells[idx.get("epsilon")!]),
      dt: Number(cells[idx.get("dt")!]),
      values,
      status: cells[idx.get("status")!],
    };
  });
}

export interface TimeSeries {
  t: number[];
  columns: Record<string, number[]>;
}

export const TIMESERIES_COLUMNS = [
  "total_energy",
  "kinetic",
  "field",
  "adiabatic_invariant",
  "escaped_count",
] as const;

export function readTimeseriesCsv(path: string): TimeSeries {
  const rows = splitCsv(readFileSync(path, "utf-8"));
  if (rows.length === 0) throw new Error(`${path}: empty file`);
  requireColumns(path, rows[0], ["t", ...TIMESERIES_COLUMNS]);
  const idx = new Map(rows[0].map((name, i) => [name, i]));
  const out: TimeSeries = { t: [], columns: {} };
  for (const col of TIMESERIES_COLUMNS) out.columns[col] = [];
  for (const cells of rows.slice(1)) {
    out.t.push(Number(cells[idx.get("t")!]));
    for (const col of TIMESERIES_COLUMNS) {
      out.columns[col].push(Number(cells[idx.get(col)!]));
    }
  }
  return out;
}

export interface Trajectory {
  label: string;
  x1: number[];
  x2: number[];
}

export function readTrajectoryCsv(path: string): Trajectory {
  const rows = splitCsv(readFileSync(path, "utf-8"));
  if (rows.length === 0) throw new Error(`${path}: empty file`);
  requireColumns(path, rows[0], ["t", "x1", "x2"]);
  const idx = new Map(rows[0].map((name, i) => [name, i]));
  const x1: number[] = [];
  const x2: number[] = [];
  for (const cells of rows.slice(1)) {
    x1.push(Number(cells[idx.get("x1")!]));
    x2.push(Number(cells[idx.get("x2")!]));
  }
  const stem = path.replace(/\\/g, "/").split("/").pop()!.replace(/\.csv$/, "");
  return { label: stem.replace(/^trajectory_/, ""), x1, x2 };
}

export interface DensityField {
  nx: number;
  ny: number;
  L: number;
  t: number;
  /** Row-major, y-outer: rho[iy][ix]. */
  rho: number[][];
}

export function readDensitySnapshot(path: string): DensityField {
  const lines = readFileSync(path, "utf-8").split(/\r?\n/).filter((l) => l.trim().length > 0);
  if (lines.length === 0) throw new Error(`${path}: empty file`);
  const header = lines[0].trim().split(/\s+/);
  if (header.length !== 4) {
    throw new Error(`${path}: header must be 'nx ny L t', got ${header.length} fields`);
  }
  const [nx, ny] = [Number(header[0]), Number(header[1])];
  const L = Number(header[2]);
  const t = Number(header[3]);
  if (!Number.isInteger(nx) || !Number.isInteger(ny) || nx < 2 || ny < 2 || !(L > 0)) {
    throw new Error(`${path}: malformed header '${lines[0].trim()}'`);
  }
  const values = lines
    .slice(1)
    .flatMap((line) => line.trim().split(/\s+/))
    .map(Number);
  if (values.length !== nx * ny) {
    throw new Error(`${path}: expected ${nx * ny} density values (${nx} x ${ny}), found ${values.length}`);
  }
  if (values.some((v) => !isFinite(v))) {
    throw new Error(`${path}: non-finite density value`);
  }
  const rho: number[][] = [];
  for (let iy = 0; iy < ny; iy++) {
    rho.push(values.slice(iy * nx, (iy + 1) * nx));
  }
  return { nx, ny, L, t, rho };
}
