/** Software RGB canvas with the drawing primitives the plots need. */

import { GLYPH_H, GLYPH_W, glyphFor, textWidth } from "./font.js";
import { encodePng } from "./png.js";

export type Color = readonly [number, number, number];

export const BLACK: Color = [0, 0, 0];
export const WHITE: Color = [255, 255, 255];
export const GREY: Color = [176, 176, 176];
export const LIGHT_GREY: Color = [228, 228, 228];

/** Deterministic series palette. */
export const PALETTE: Color[] = [
  [31, 119, 180],
  [214, 39, 40],
  [44, 160, 44],
  [255, 127, 14],
  [148, 103, 189],
  [140, 86, 75],
  [227, 119, 194],
  [23, 190, 207],
];

export class Canvas {
  readonly width: number;
  readonly height: number;
  readonly data: Uint8Array;

  constructor(width: number, height: number, background: Color = WHITE) {
    this.width = width;
    this.height = height;
    this.data = new Uint8Array(width * height * 3);
    for (let i = 0; i < width * height; i++) {
      this.data[3 * i] = background[0];
      this.data[3 * i + 1] = background[1];
      this.data[3 * i + 2] = background[2];
    }
  }

  set(x: number, y: number, c: Color): void {
    if (x < 0 || y < 0 || x >= this.width || y >= this.height) return;
    const i = 3 * (y * this.width + x);
    this.data[i] = c[0];
    this.data[i + 1] = c[1];
    this.data[i + 2] = c[2];
  }

  fillRect(x0: number, y0: number, w: number, h: number, c: Color): void {
    for (let y = y0; y < y0 + h; y++) {
      for (let x = x0; x < x0 + w; x++) {
        this.set(x, y, c);
      }
    }
  }

  /** Solid line between pixel centres; thickness grows the stamp. */
  line(x0: number, y0: number, x1: number, y1: number, c: Color, thickness = 1): void {
    const steps = Math.max(Math.abs(x1 - x0), Math.abs(y1 - y0), 1);
    const r = Math.floor(thickness / 2);
    for (let s = 0; s <= steps; s++) {
      const x = Math.round(x0 + ((x1 - x0) * s) / steps);
      const y = Math.round(y0 + ((y1 - y0) * s) / steps);
      for (let dy = -r; dy <= thickness - 1 - r; dy++) {
        for (let dx = -r; dx <= thickness - 1 - r; dx++) {
          this.set(x + dx, y + dy, c);
        }
      }
    }
  }

  circleOutline(cx: number, cy: number, radius: number, c: Color, thickness = 1): void {
    const n = Math.max(64, Math.ceil(2 * Math.PI * radius));
    let px = Math.round(cx + radius);
    let py = Math.round(cy);
    for (let k = 1; k <= n; k++) {
      const a = (2 * Math.PI * k) / n;
      const x = Math.round(cx + radius * Math.cos(a));
      const y = Math.round(cy + radius * Math.sin(a));
      this.line(px, py, x, y, c, thickness);
      px = x;
      py = y;
    }
  }

  marker(x: number, y: number, c: Color, size = 2): void {
    this.fillRect(x - size + 1, y - size + 1, 2 * size - 1, 2 * size - 1, c);
  }

  text(x: number, y: number, s: string, c: Color, scale = 1): void {
    let cx = x;
    for (const ch of s) {
      const glyph = glyphFor(ch);
      for (let gy = 0; gy < GLYPH_H; gy++) {
        for (let gx = 0; gx < GLYPH_W; gx++) {
          if (glyph[gy][gx] === "#") {
            this.fillRect(cx + gx * scale, y + gy * scale, scale, scale, c);
          }
        }
      }
      cx += (GLYPH_W + 1) * scale;
    }
  }

  textCentered(cx: number, y: number, s: string, c: Color, scale = 1): void {
    this.text(Math.round(cx - textWidth(s, scale) / 2), y, s, c, scale);
  }

  toPng(): Buffer {
    return encodePng(this.width, this.height, this.data);
  }
}

/** Linear or log10 mapping from data range to pixel range. */
export class Scale {
  constructor(
    readonly lo: number,
    readonly hi: number,
    readonly pxLo: number,
    readonly pxHi: number,
    readonly log: boolean,
  ) {
    if (log && (lo <= 0 || hi <= 0)) {
      throw new Error("log scale requires positive bounds");
    }
  }

  toPx(v: number): number {
    const [a, b] = this.log ? [Math.log10(this.lo), Math.log10(this.hi)] : [this.lo, this.hi];
    const t = b === a ? 0.5 : ((this.log ? Math.log10(v) : v) - a) / (b - a);
    return Math.round(this.pxLo + t * (this.pxHi - this.pxLo));
  }

  ticks(target = 5): number[] {
    if (this.lo === this.hi) return [this.lo];
    if (this.log) {
      const d0 = Math.ceil(Math.log10(this.lo) - 1e-12);
      const d1 = Math.floor(Math.log10(this.hi) + 1e-12);
      const out: number[] = [];
      const stride = Math.max(1, Math.ceil((d1 - d0 + 1) / (target + 1)));
      for (let d = d0; d <= d1; d += stride) out.push(10 ** d);
      return out.length > 0 ? out : [this.lo, this.hi];
    }
    const span = this.hi - this.lo;
    const rawStep = span / target;
    const mag = 10 ** Math.floor(Math.log10(rawStep));
    const step = [1, 2, 5, 10].map((m) => m * mag).find((s) => span / s <= target + 1) ?? mag * 10;
    const out: number[] = [];
    for (let v = Math.ceil(this.lo / step) * step; v <= this.hi + 1e-12 * span; v += step) {
      out.push(Math.abs(v) < 1e-12 * span ? 0 : v);
    }
    return out;
  }
}

export function formatTick(v: number): string {
  if (v === 0) return "0";
  const a = Math.abs(v);
  if (a >= 1e4 || a < 1e-3) {
    return v.toExponential(0).replace("e", "e").toLowerCase();
  }
  const s = v.toPrecision(3);
  return s.includes(".") ? s.replace(/\.?0+$/, "") : s;
}

/** Pad a degenerate range so scales and ticks stay well defined. */
export function padRange(lo: number, hi: number, log = false): [number, number] {
  if (!(isFinite(lo) && isFinite(hi))) throw new Error("non-finite data range");
  if (log) {
    if (lo === hi) return [lo / 2, hi * 2];
    return [lo / 1.3, hi * 1.3];
  }
  if (lo === hi) {
    const pad = lo === 0 ? 1 : Math.abs(lo) * 0.1;
    return [lo - pad, hi + pad];
  }
  const pad = (hi - lo) * 0.05;
  return [lo - pad, hi + pad];
}
