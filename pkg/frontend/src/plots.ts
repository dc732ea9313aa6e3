/** The four figure renderers: error curves, trajectories, time series, density. */

import { viridis } from "./colormap.js";
import {
  DensityField,
  ERROR_COLUMNS,
  ErrorRow,
  TimeSeries,
  Trajectory,
} from "./data.js";
import { textWidth } from "./font.js";
import {
  BLACK,
  Canvas,
  Color,
  formatTick,
  GREY,
  LIGHT_GREY,
  PALETTE,
  padRange,
  Scale,
  WHITE,
} from "./raster.js";

export interface Series {
  label: string;
  color: Color;
  xs: number[];
  ys: number[];
}

interface AxesSpec {
  title: string;
  xLabel: string;
  yLabel: string;
  logX?: boolean;
  logY?: boolean;
  square?: boolean;
  legendNote?: string;
}

const W = 640;
const H = 480;
const MARGIN = { left: 76, right: 16, top: 28, bottom: 42 };

function drawFrame(c: Canvas, xs: Scale, ys: Scale, spec: AxesSpec): void {
  const x0 = MARGIN.left;
  const x1 = c.width - MARGIN.right;
  const y0 = MARGIN.top;
  const y1 = c.height - MARGIN.bottom;
  for (const v of xs.ticks()) {
    const px = xs.toPx(v);
    c.line(px, y0, px, y1, LIGHT_GREY);
    c.textCentered(px, y1 + 6, formatTick(v), BLACK);
  }
  for (const v of ys.ticks()) {
    const py = ys.toPx(v);
    c.line(x0, py, x1, py, LIGHT_GREY);
    const label = formatTick(v);
    c.text(x0 - 6 - textWidth(label), py - 3, label, BLACK);
  }
  c.line(x0, y0, x1, y0, BLACK);
  c.line(x0, y1, x1, y1, BLACK);
  c.line(x0, y0, x0, y1, BLACK);
  c.line(x1, y0, x1, y1, BLACK);
  c.textCentered((x0 + x1) / 2, 8, spec.title, BLACK, 2);
  c.textCentered((x0 + x1) / 2, y1 + 22, spec.xLabel, BLACK);
  // y label drawn horizontally above the axis
  c.text(4, y0 - 12, spec.yLabel, BLACK);
}

function drawLegend(c: Canvas, entries: { label: string; color: Color }[], note?: string): void {
  const lines = [...entries.map((e) => e.label), ...(note ? [note] : [])];
  if (lines.length === 0) return;
  const w = Math.max(...lines.map((l) => textWidth(l))) + 24;
  const h = lines.length * 12 + 8;
  const x = c.width - MARGIN.right - w - 6;
  const y = MARGIN.top + 6;
  c.fillRect(x, y, w, h, WHITE);
  c.line(x, y, x + w, y, GREY);
  c.line(x, y + h, x + w, y + h, GREY);
  c.line(x, y, x, y + h, GREY);
  c.line(x + w, y, x + w, y + h, GREY);
  entries.forEach((e, i) => {
    const ly = y + 6 + i * 12;
    c.fillRect(x + 5, ly + 1, 12, 5, e.color);
    c.text(x + 21, ly, e.label, BLACK);
  });
  if (note) {
    c.text(x + 5, y + 6 + entries.length * 12, note, BLACK);
  }
}

function plotSeries(spec: AxesSpec, series: Series[]): Canvas {
  const c = new Canvas(W, H);
  const allX = series.flatMap((s) => s.xs);
  const allY = series.flatMap((s) => s.ys);
  if (allX.length === 0) {
    throw new Error("nothing to plot: every point was filtered out");
  }
  let [xLo, xHi] = padRange(Math.min(...allX), Math.max(...allX), spec.logX);
  let [yLo, yHi] = padRange(Math.min(...allY), Math.max(...allY), spec.logY);
  if (spec.square) {
    const span = Math.max(xHi - xLo, yHi - yLo);
    const cx = (xLo + xHi) / 2;
    const cy = (yLo + yHi) / 2;
    [xLo, xHi] = [cx - span / 2, cx + span / 2];
    [yLo, yHi] = [cy - span / 2, cy + span / 2];
  }
  const xs = new Scale(xLo, xHi, MARGIN.left, W - MARGIN.right, Boolean(spec.logX));
  const ys = new Scale(yLo, yHi, H - MARGIN.bottom, MARGIN.top, Boolean(spec.logY));
  drawFrame(c, xs, ys, spec);
  for (const s of series) {
    for (let i = 0; i + 1 < s.xs.length; i++) {
      c.line(xs.toPx(s.xs[i]), ys.toPx(s.ys[i]), xs.toPx(s.xs[i + 1]), ys.toPx(s.ys[i + 1]), s.color, 2);
    }
    for (let i = 0; i < s.xs.length; i++) {
      c.marker(xs.toPx(s.xs[i]), ys.toPx(s.ys[i]), s.color);
    }
  }
  drawLegend(c, series, spec.legendNote);
  return c;
}

export function renderErrorCurves(rows: ErrorRow[], column: string): Canvas {
  if (!(ERROR_COLUMNS as readonly string[]).includes(column)) {
    throw new Error(`unknown error column '${column}' (choose from ${ERROR_COLUMNS.join(", ")})`);
  }
  const groups = new Map<string, ErrorRow[]>();
  for (const row of rows) {
    const key = `order ${row.order} dt=${row.dt}`;
    (groups.get(key) ?? groups.set(key, []).get(key)!).push(row);
  }
  let omitted = 0;
  const series: Series[] = [];
  let colorIdx = 0;
  for (const [label, group] of [...groups.entries()].sort()) {
    const pts: [number, number][] = [];
    for (const row of group) {
      const v = row.values[column];
      if (row.status === "failed" || v === null || !(v > 0)) {
        omitted += 1;
        continue;
      }
      pts.push([row.epsilon, v]);
    }
    pts.sort((a, b) => a[0] - b[0]);
    if (pts.length > 0) {
      series.push({
        label,
        color: PALETTE[colorIdx % PALETTE.length],
        xs: pts.map((p) => p[0]),
        ys: pts.map((p) => p[1]),
      });
    }
    colorIdx += 1;
  }
  return plotSeries(
    {
      title: column,
      xLabel: "epsilon",
      yLabel: column,
      logX: true,
      logY: true,
      legendNote: omitted > 0 ? `(${omitted} cells omitted)` : undefined,
    },
    series,
  );
}

export function renderTimeseries(ts: TimeSeries): Canvas {
  const names = ["total_energy", "kinetic", "field", "adiabatic_invariant"];
  const series: Series[] = names.map((name, i) => ({
    label: name,
    color: PALETTE[i % PALETTE.length],
    xs: ts.t,
    ys: ts.columns[name],
  }));
  return plotSeries(
    { title: "energy and invariant", xLabel: "t", yLabel: "value" },
    series,
  );
}

export function renderTrajectories(trajs: Trajectory[]): Canvas {
  const series: Series[] = trajs.map((tr, i) => ({
    label: tr.label,
    color: PALETTE[i % PALETTE.length],
    xs: tr.x1,
    ys: tr.x2,
  }));
  return plotSeries(
    { title: "trajectories", xLabel: "x1", yLabel: "x2", square: true },
    series,
  );
}

export function renderDensity(field: DensityField): Canvas {
  const size = 560;
  const plot = { x0: 70, y0: 34, w: 440, h: 440 };
  const c = new Canvas(size, size);
  let lo = Infinity;
  let hi = -Infinity;
  for (const row of field.rho) {
    for (const v of row) {
      lo = Math.min(lo, v);
      hi = Math.max(hi, v);
    }
  }
  const hx = (2 * field.L) / (field.nx - 1);
  const hy = (2 * field.L) / (field.ny - 1);
  for (let py = 0; py < plot.h; py++) {
    // pixel row py maps to decreasing y (image origin is top-left)
    const y = field.L - (2 * field.L * py) / (plot.h - 1);
    const v = (y + field.L) / hy;
    const iv = Math.min(field.ny - 2, Math.max(0, Math.floor(v)));
    const fv = Math.min(1, Math.max(0, v - iv));
    for (let px = 0; px < plot.w; px++) {
      const x = -field.L + (2 * field.L * px) / (plot.w - 1);
      const u = (x + field.L) / hx;
      const iu = Math.min(field.nx - 2, Math.max(0, Math.floor(u)));
      const fu = Math.min(1, Math.max(0, u - iu));
      const val =
        (1 - fu) * (1 - fv) * field.rho[iv][iu] +
        fu * (1 - fv) * field.rho[iv][iu + 1] +
        (1 - fu) * fv * field.rho[iv + 1][iu] +
        fu * fv * field.rho[iv + 1][iu + 1];
      const unit = hi > lo ? (val - lo) / (hi - lo) : 0.5;
      c.set(plot.x0 + px, plot.y0 + py, viridis(unit));
    }
  }
  // disk boundary of radius L
  c.circleOutline(plot.x0 + (plot.w - 1) / 2, plot.y0 + (plot.h - 1) / 2, (plot.w - 1) / 2, WHITE);
  // frame and axis ticks in data coordinates
  const xs = new Scale(-field.L, field.L, plot.x0, plot.x0 + plot.w - 1, false);
  const ys = new Scale(-field.L, field.L, plot.y0 + plot.h - 1, plot.y0, false);
  for (const v of xs.ticks()) {
    const px = xs.toPx(v);
    c.line(px, plot.y0 + plot.h, px, plot.y0 + plot.h + 3, BLACK);
    c.textCentered(px, plot.y0 + plot.h + 7, formatTick(v), BLACK);
  }
  for (const v of ys.ticks()) {
    const py = ys.toPx(v);
    c.line(plot.x0 - 4, py, plot.x0 - 1, py, BLACK);
    const label = formatTick(v);
    c.text(plot.x0 - 8 - textWidth(label), py - 3, label, BLACK);
  }
  c.line(plot.x0 - 1, plot.y0 - 1, plot.x0 + plot.w, plot.y0 - 1, BLACK);
  c.line(plot.x0 - 1, plot.y0 + plot.h, plot.x0 + plot.w, plot.y0 + plot.h, BLACK);
  c.line(plot.x0 - 1, plot.y0 - 1, plot.x0 - 1, plot.y0 + plot.h, BLACK);
  c.line(plot.x0 + plot.w, plot.y0 - 1, plot.x0 + plot.w, plot.y0 + plot.h, BLACK);
  c.textCentered(plot.x0 + plot.w / 2, 10, `density t=${formatTick(field.t)}`, BLACK, 2);
  // colour bar
  const bar = { x0: plot.x0 + plot.w + 14, y0: plot.y0, w: 16, h: plot.h };
  for (let py = 0; py < bar.h; py++) {
    const unit = 1 - py / (bar.h - 1);
    for (let px = 0; px < bar.w; px++) {
      c.set(bar.x0 + px, bar.y0 + py, viridis(unit));
    }
  }
  c.text(bar.x0, bar.y0 - 12, formatTick(hi), BLACK);
  c.text(bar.x0, bar.y0 + bar.h + 5, formatTick(lo), BLACK);
  return c;
}
