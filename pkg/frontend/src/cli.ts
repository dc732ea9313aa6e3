#!/usr/bin/env node
/**
 * render <figure-kind> <inputs...> -o <image.png> [--column NAME]
 *
 * Figure kinds:
 *   error_curves  errors.csv from a single-particle sweep (one input);
 *                 --column picks the error column (default x_err_ref)
 *   trajectory    one or more trajectory CSVs
 *   timeseries    timeseries.csv from a Vlasov-Poisson run (one input)
 *   density       one density snapshot file
 */

import { writeFileSync } from "node:fs";
import { pathToFileURL } from "node:url";

import {
  readDensitySnapshot,
  readErrorsCsv,
  readTimeseriesCsv,
  readTrajectoryCsv,
} from "./data.js";
import {
  renderDensity,
  renderErrorCurves,
  renderTimeseries,
  renderTrajectories,
} from "./plots.js";

const KINDS = ["error_curves", "trajectory", "timeseries", "density"] as const;
type Kind = (typeof KINDS)[number];

export interface RenderRequest {
  kind: Kind;
  inputs: string[];
  output: string;
  column: string;
}

export function parseArgs(argv: string[]): RenderRequest {
  if (argv.length === 0 || argv[0] !== "render") {
    throw new Error("usage: gyropic-render render <figure-kind> <inputs...> -o <image.png>");
  }
  const rest = argv.slice(1);
  if (rest.length === 0 || !(KINDS as readonly string[]).includes(rest[0])) {
    throw new Error(`figure kind must be one of ${KINDS.join(", ")}`);
  }
  const kind = rest[0] as Kind;
  const inputs: string[] = [];
  let output = "";
  let column = "x_err_ref";
  for (let i = 1; i < rest.length; i++) {
    if (rest[i] === "-o" || rest[i] === "--output") {
      output = rest[++i] ?? "";
    } else if (rest[i] === "--column") {
      column = rest[++i] ?? "";
    } else if (rest[i].startsWith("-")) {
      throw new Error(`unknown option ${rest[i]}`);
    } else {
      inputs.push(rest[i]);
    }
  }
  if (output === "") throw new Error("missing -o <image.png>");
  if (inputs.length === 0) throw new Error("missing input file(s)");
  if (kind !== "trajectory" && inputs.length !== 1) {
    throw new Error(`${kind} takes exactly one input file`);
  }
  return { kind, inputs, output, column };
}

export function render(req: RenderRequest): void {
  let canvas;
  switch (req.kind) {
    case "error_curves":
      canvas = renderErrorCurves(readErrorsCsv(req.inputs[0]), req.column);
      break;
    case "trajectory":
      canvas = renderTrajectories(req.inputs.map(readTrajectoryCsv));
      break;
    case "timeseries":
      canvas = renderTimeseries(readTimeseriesCsv(req.inputs[0]));
      break;
    case "density":
      canvas = renderDensity(readDensitySnapshot(req.inputs[0]));
      break;
  }
  writeFileSync(req.output, canvas.toPng());
}

export function main(argv: string[]): number {
  try {
    const req = parseArgs(argv);
    render(req);
    console.log(`wrote ${req.output}`);
    return 0;
  } catch (err) {
    console.error(`error: ${err instanceof Error ? err.message : err}`);
    return 2;
  }
}

if (process.argv[1] !== undefined && import.meta.url === pathToFileURL(process.argv[1]).href) {
  process.exit(main(process.argv.slice(2)));
}
