import { mkdtempSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { fileURLToPath } from "node:url";
import { describe, expect, it } from "vitest";

import {
  readDensitySnapshot,
  readErrorsCsv,
  readTimeseriesCsv,
  readTrajectoryCsv,
} from "../src/data.js";

const FIXTURES = fileURLToPath(new URL("./fixtures", import.meta.url));

function tempFile(name: string, content: string): string {
  const dir = mkdtempSync(join(tmpdir(), "gyropic-render-"));
  const path = join(dir, name);
  writeFileSync(path, content);
  return path;
}

describe("errors.csv reader", () => {
  it("parses the real sweep output", () => {
    const rows = readErrorsCsv(join(FIXTURES, "errors.csv"));
    expect(rows.length).toBe(6);
    const ok = rows.filter((r) => r.status === "ok");
    const noRef = rows.filter((r) => r.status === "no_ref");
    expect(ok.length).toBe(4);
    expect(noRef.length).toBe(2);
    for (const row of noRef) {
      expect(row.values.x_err_ref).toBeNull();
      expect(row.values.w_err_drift).not.toBeNull();
    }
    expect(rows.every((r) => r.family === "SingleParticleNoE")).toBe(true);
  });

  it("names a missing column", () => {
    const path = tempFile("broken.csv", "family,order,epsilon,dt,status\nX,3,1,0.1,ok\n");
    expect(() => readErrorsCsv(path)).toThrow(/missing column 'x_err_ref'/);
  });

  it("rejects ragged rows", () => {
    const header =
      "family,order,epsilon,dt,x_err_ref,w_err_ref_scaled,e_err_ref,x_err_limit,w_err_drift,e_err_limit,status";
    const path = tempFile("ragged.csv", `${header}\nX,3,1\n`);
    expect(() => readErrorsCsv(path)).toThrow(/row 2/);
  });
});

describe("timeseries reader", () => {
  it("parses the real run output", () => {
    const ts = readTimeseriesCsv(join(FIXTURES, "timeseries.csv"));
    expect(ts.t.length).toBe(21);
    expect(ts.t[0]).toBe(0);
    expect(ts.columns.total_energy.length).toBe(21);
    expect(ts.columns.escaped_count.every((v) => v >= 0)).toBe(true);
  });

  it("names a missing column", () => {
    const path = tempFile("ts.csv", "t,total_energy\n0,1\n");
    expect(() => readTimeseriesCsv(path)).toThrow(/missing column 'kinetic'/);
  });
});

describe("trajectory reader", () => {
  it("parses and labels from the file name", () => {
    const tr = readTrajectoryCsv(join(FIXTURES, "trajectory_order3_eps0.1_dt0.01.csv"));
    expect(tr.label).toBe("order3_eps0.1_dt0.01");
    expect(tr.x1.length).toBe(201);
    expect(tr.x1[0]).toBeCloseTo(5.0, 12);
    expect(tr.x2[0]).toBeCloseTo(4.0, 12);
  });
});

describe("density reader", () => {
  it("parses the real snapshot", () => {
    const f = readDensitySnapshot(join(FIXTURES, "density_t1.txt"));
    expect(f.nx).toBe(33);
    expect(f.ny).toBe(33);
    expect(f.L).toBe(6);
    expect(f.t).toBe(1);
    expect(f.rho.length).toBe(33);
    expect(f.rho[0].length).toBe(33);
  });

  it("rejects a count mismatch naming both counts", () => {
    const path = tempFile("short.txt", "3 3 6.0 0.0\n1 2 3\n4 5 6\n");
    expect(() => readDensitySnapshot(path)).toThrow(/expected 9 density values \(3 x 3\), found 6/);
  });

  it("rejects a malformed header", () => {
    const path = tempFile("header.txt", "3 3 6.0\n");
    expect(() => readDensitySnapshot(path)).toThrow(/header/);
  });
});
